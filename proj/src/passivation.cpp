#include "pacosim/passivation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pacosim {

namespace {

constexpr double kStrictTol = 1e-12;
constexpr double kEqualRelTol = 1e-9;

bool strictly_positive(double x) { return x > kStrictTol; }
bool strictly_greater(double a, double b) { return a - b > kStrictTol; }
bool at_least(double a, double b) { return a >= b - kStrictTol; }
bool approx_equal(double a, double b) {
    return std::abs(a - b) <= kEqualRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}
double positive_part(double x) { return x > 0.0 ? x : 0.0; }

double vsp_threshold(const PassivationMatrix& m, double gamma, double a) {
    return m.m22 * gamma / std::sqrt(1.0 - a);
}

double require_vsp_a(const PassivationCase& pcase) {
    if (!pcase.a.has_value()) throw std::invalid_argument("VSP case requires the parameter a");
    const double a = *pcase.a;
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("VSP parameter a must lie in (0,1)");
    return a;
}

}  // namespace

PassivationMatrix::PassivationMatrix(double m11_, double m12_, double m21_, double m22_)
    : m11(m11_), m12(m12_), m21(m21_), m22(m22_) {
    if (!std::isfinite(m11) || !std::isfinite(m12) || !std::isfinite(m21) ||
        !std::isfinite(m22)) {
        throw std::invalid_argument("passivation matrix entries must be finite");
    }
    if (det() == 0.0) throw std::invalid_argument("passivation matrix must be invertible");
}

PassivationKind passivation_kind_from_string(const std::string& name) {
    if (name == "Passive" || name == "passive") return PassivationKind::Passive;
    if (name == "OSP" || name == "osp") return PassivationKind::Osp;
    if (name == "ISP" || name == "isp") return PassivationKind::Isp;
    if (name == "VSP" || name == "vsp") return PassivationKind::Vsp;
    throw std::invalid_argument("unknown passivation case: " + name);
}

std::string to_string(PassivationKind kind) {
    switch (kind) {
        case PassivationKind::Passive: return "Passive";
        case PassivationKind::Osp: return "OSP";
        case PassivationKind::Isp: return "ISP";
        case PassivationKind::Vsp: return "VSP";
    }
    return "Passive";
}

bool check_case(const PassivationMatrix& m, double gamma, const PassivationCase& pcase) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    switch (pcase.kind) {
        case PassivationKind::Passive:
            return approx_equal(m.m11, m.m21) && approx_equal(m.m22, -m.m12) &&
                   at_least(m.m11, m.m22 * gamma) && strictly_positive(m.m22 * gamma);
        case PassivationKind::Osp:
            return strictly_greater(m.m11 * m.m22, m.m12 * m.m21) &&
                   strictly_positive(m.m12 * m.m21) && at_least(m.m21, m.m22 * gamma) &&
                   strictly_positive(m.m22 * gamma);
        case PassivationKind::Isp:
            return strictly_greater(m.m12 * m.m21, m.m11 * m.m22) &&
                   strictly_positive(m.m11 * m.m22) && at_least(m.m11, m.m12 * gamma) &&
                   strictly_positive(m.m12 * gamma);
        case PassivationKind::Vsp: {
            const double a = require_vsp_a(pcase);
            const double bound = vsp_threshold(m, gamma, a);
            return strictly_positive(m.m11) && approx_equal(m.m12, 0.0) &&
                   at_least(m.m21, bound) && strictly_positive(bound);
        }
    }
    return false;
}

double case_violation(const PassivationMatrix& m, double gamma, const PassivationCase& pcase) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    switch (pcase.kind) {
        case PassivationKind::Passive:
            return std::abs(m.m11 - m.m21) + std::abs(m.m22 + m.m12) +
                   positive_part(m.m22 * gamma - m.m11) + positive_part(-m.m22 * gamma);
        case PassivationKind::Osp:
            return positive_part(m.m12 * m.m21 - m.m11 * m.m22) +
                   positive_part(-m.m12 * m.m21) + positive_part(m.m22 * gamma - m.m21) +
                   positive_part(-m.m22 * gamma);
        case PassivationKind::Isp:
            return positive_part(m.m11 * m.m22 - m.m12 * m.m21) +
                   positive_part(-m.m11 * m.m22) + positive_part(m.m12 * gamma - m.m11) +
                   positive_part(-m.m12 * gamma);
        case PassivationKind::Vsp: {
            const double a = require_vsp_a(pcase);
            const double bound = vsp_threshold(m, gamma, a);
            return positive_part(-m.m11) + std::abs(m.m12) + positive_part(bound - m.m21) +
                   positive_part(-bound);
        }
    }
    return 0.0;
}

SupplyRateSpec achieved_levels(const PassivationMatrix& m, const PassivationCase& pcase) {
    switch (pcase.kind) {
        case PassivationKind::Passive:
            return {0.0, 0.0};
        case PassivationKind::Osp:
            if (m.m21 == 0.0 || m.m22 == 0.0) {
                throw std::domain_error("degenerate matrix: OSP level undefined");
            }
            return {0.0, 0.5 * (m.m11 / m.m21 + m.m12 / m.m22)};
        case PassivationKind::Isp:
            if (m.m11 == 0.0 || m.m12 == 0.0) {
                throw std::domain_error("degenerate matrix: ISP level undefined");
            }
            return {0.5 * (m.m21 / m.m11 + m.m22 / m.m12), 0.0};
        case PassivationKind::Vsp: {
            const double a = require_vsp_a(pcase);
            if (m.m11 == 0.0 || m.m21 == 0.0) {
                throw std::domain_error("degenerate matrix: VSP levels undefined");
            }
            return {a * m.m21 / (2.0 * m.m11), m.m11 / (2.0 * m.m21)};
        }
    }
    return {0.0, 0.0};
}

FirstOrderLag::FirstOrderLag(double gain, double time_constant)
    : gain_(gain), tau_(time_constant) {
    if (!(tau_ > 0.0)) throw std::invalid_argument("time constant must be positive");
}

double FirstOrderLag::step(double input, double dt) {
    const double decay = std::exp(-dt / tau_);
    state_ = decay * state_ + (1.0 - decay) * gain_ * input;
    return state_;
}

RationalDelaySystem FirstOrderLag::rational_form() const {
    return RationalDelaySystem({gain_}, {tau_, 1.0});
}

WrappedSystem::WrappedSystem(SisoSystem& inner, const PassivationMatrix& m)
    : inner_(&inner), m_(m) {
    set_matrix(m);
}

void WrappedSystem::set_matrix(const PassivationMatrix& m) {
    if (m.m11 == 0.0) {
        throw std::domain_error("m11 must be nonzero: the input channel is unreachable");
    }
    m_ = m;
}

double WrappedSystem::transform_step(double u0, double dt) {
    const double u = (u0 - m_.m12 * y_prev_) / m_.m11;
    const double y = inner_->step(u, dt);
    const double y0 = m_.m21 * u + m_.m22 * y;
    y_prev_ = y;
    return y0;
}

bool WrappedSystem::contraction_ok() const {
    return std::abs(m_.m12 / m_.m11) * std::abs(inner_->feedthrough()) < 1.0;
}

void WrappedSystem::reset() {
    y_prev_ = 0.0;
    inner_->reset();
}

TransformedFrequencySystem::TransformedFrequencySystem(RationalDelaySystem inner,
                                                       const PassivationMatrix& m)
    : inner_(std::move(inner)), m_(m) {}

std::complex<double> TransformedFrequencySystem::response(double omega) const {
    const std::complex<double> g = inner_.response(omega);
    const std::complex<double> den = m_.m11 + m_.m12 * g;
    const double scale = 1.0 + std::abs(m_.m11) + std::abs(m_.m12) * std::abs(g);
    if (std::abs(den) < 1e-12 * scale) {
        throw std::domain_error("transformed response is singular at this frequency");
    }
    return (m_.m21 + m_.m22 * g) / den;
}

ResponseFn TransformedFrequencySystem::fn() const {
    return [self = *this](double omega) { return self.response(omega); };
}

}  // namespace pacosim
