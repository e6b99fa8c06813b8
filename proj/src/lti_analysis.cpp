#include "pacosim/lti_analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace pacosim {

namespace {

constexpr double kStabilityTol = 1e-9;  // on root real parts

std::complex<double> horner(std::span<const double> coeffs, std::complex<double> s) {
    std::complex<double> acc(0.0, 0.0);
    for (double c : coeffs) acc = acc * s + c;
    return acc;
}

// Golden-section minimization on [lo, hi]; assumes f is cheap.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo,
                                     double hi) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-13 * (1.0 + std::abs(b)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Grid minimum of `objective`, locally refined around the grid minimizer.
IndexResult sweep_min(const std::function<double(double)>& objective, const FrequencyGrid& grid,
                      bool refine) {
    const auto& w = grid.omegas;
    std::size_t best = 0;
    double best_val = objective(w[0]);
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double v = objective(w[i]);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    IndexResult result{best_val, w[best]};
    if (refine && w.size() > 1) {
        const double lo = w[best > 0 ? best - 1 : 0];
        const double hi = w[std::min(best + 1, w.size() - 1)];
        if (hi > lo) {
            const auto [x, fx] = golden_min(objective, lo, hi);
            if (fx < result.value) result = {fx, x};
        }
    }
    return result;
}

void require_stable(const RationalDelaySystem& sys) {
    if (!sys.is_stable()) {
        throw std::domain_error("system is not stable; passivity indices are undefined");
    }
}

}  // namespace

RationalDelaySystem::RationalDelaySystem(std::vector<double> num_coeffs,
                                         std::vector<double> den_coeffs, double dead_time)
    : num(std::move(num_coeffs)), den(std::move(den_coeffs)), tau(dead_time) {
    if (den.empty()) throw std::invalid_argument("denominator must not be empty");
    if (den.front() == 0.0) throw std::invalid_argument("denominator leading coefficient is zero");
    if (tau < 0.0) throw std::invalid_argument("dead time must be nonnegative");
    // strip leading zeros so the degree comparison is meaningful
    while (num.size() > 1 && num.front() == 0.0) num.erase(num.begin());
    if (num.empty()) num.push_back(0.0);
    if (num.size() > den.size()) {
        throw std::invalid_argument("numerator degree exceeds denominator degree");
    }
}

std::complex<double> RationalDelaySystem::response(double omega) const {
    if (omega < 0.0) throw std::domain_error("frequency must be nonnegative");
    const std::complex<double> s(0.0, omega);
    const std::complex<double> d = horner(den, s);
    if (std::abs(d) == 0.0) throw std::domain_error("pole on the imaginary axis");
    std::complex<double> g = horner(num, s) / d;
    if (tau > 0.0) g *= std::exp(std::complex<double>(0.0, -omega * tau));
    return g;
}

bool RationalDelaySystem::is_stable() const {
    for (const auto& root : polynomial_roots(den)) {
        if (root.real() >= -kStabilityTol) return false;
    }
    return true;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
    std::size_t first = 0;
    while (first < coeffs.size() && coeffs[first] == 0.0) ++first;
    if (first == coeffs.size()) throw std::invalid_argument("zero polynomial has no roots");
    const std::span<const double> p = coeffs.subspan(first);
    const std::size_t n = p.size() - 1;
    if (n == 0) return {};

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) =
            -p[n - i] / p[0];
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    return roots;
}

FrequencyGrid::FrequencyGrid(std::vector<double> points) : omegas(std::move(points)) {
    if (omegas.empty()) throw std::invalid_argument("frequency grid is empty");
    double prev = 0.0;
    for (double w : omegas) {
        if (!(w > prev)) {
            throw std::invalid_argument("frequency grid must be positive and strictly increasing");
        }
        prev = w;
    }
}

FrequencyGrid FrequencyGrid::logspace(double omega_min, double omega_max, std::size_t count) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || count < 2) {
        throw std::invalid_argument("bad logspace parameters");
    }
    std::vector<double> w(count);
    const double l0 = std::log10(omega_min);
    const double l1 = std::log10(omega_max);
    for (std::size_t i = 0; i < count; ++i) {
        w[i] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) /
                                   static_cast<double>(count - 1));
    }
    w.front() = omega_min;
    w.back() = omega_max;
    return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::analysis_default() { return logspace(1e-3, 1e4, 2000); }

IndexResult ifp_index(const ResponseFn& g, const FrequencyGrid& grid, bool refine) {
    // SISO specialization of (1/2) min eig(G + G*): just min Re G.
    return sweep_min([&](double w) { return g(w).real(); }, grid, refine);
}

IndexResult ifp_index(const RationalDelaySystem& sys, const FrequencyGrid& grid, bool refine) {
    require_stable(sys);
    return ifp_index([&](double w) { return sys.response(w); }, grid, refine);
}

IndexResult ofp_index(const ResponseFn& g, const FrequencyGrid& grid, bool refine) {
    return sweep_min(
        [&](double w) {
            const std::complex<double> v = g(w);
            if (std::abs(v) == 0.0) {
                throw std::domain_error("zero response on the grid; OFP index undefined");
            }
            return (1.0 / v).real();
        },
        grid, refine);
}

IndexResult ofp_index(const RationalDelaySystem& sys, const FrequencyGrid& grid, bool refine) {
    require_stable(sys);
    return ofp_index([&](double w) { return sys.response(w); }, grid, refine);
}

IndexResult l2_gain(const ResponseFn& g, const FrequencyGrid& grid, bool refine) {
    IndexResult r = sweep_min([&](double w) { return -std::abs(g(w)); }, grid, refine);
    return {-r.value, r.omega};
}

IndexResult l2_gain(const RationalDelaySystem& sys, const FrequencyGrid& grid, bool refine) {
    require_stable(sys);
    return l2_gain([&](double w) { return sys.response(w); }, grid, refine);
}

std::vector<NyquistPoint> nyquist_points(const ResponseFn& g, const FrequencyGrid& grid,
                                         bool inverse) {
    std::vector<NyquistPoint> points;
    points.reserve(grid.omegas.size());
    for (double w : grid.omegas) {
        std::complex<double> v = g(w);
        if (inverse) {
            if (std::abs(v) == 0.0) {
                throw std::domain_error("zero response; inverse Nyquist undefined");
            }
            v = 1.0 / v;
        }
        points.push_back({w, v});
    }
    return points;
}

std::vector<NyquistPoint> nyquist_points(const RationalDelaySystem& sys,
                                         const FrequencyGrid& grid, bool inverse) {
    require_stable(sys);
    return nyquist_points([&](double w) { return sys.response(w); }, grid, inverse);
}

void write_nyquist_csv(std::ostream& os, std::span<const NyquistPoint> points) {
    os << "omega,re,im\n";
    char buf[104];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.omega, p.value.real(),
                      p.value.imag());
        os << buf;
    }
}

bool check_fgs_interconnection(const SupplyRateSpec& lv1, const SupplyRateSpec& lv2) {
    return lv1.epsilon + lv2.delta > 0.0 && lv2.epsilon + lv1.delta > 0.0;
}

}  // namespace pacosim
