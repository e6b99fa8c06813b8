#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "pacosim/lti_analysis.hpp"
#include "pacosim/passivation.hpp"

using namespace pacosim;

namespace {

RationalDelaySystem first_order(double gain = 1.0, double tau_delay = 0.0) {
    return RationalDelaySystem({gain}, {1.0, 1.0}, tau_delay);
}

// Brute-force reference sweep on a uniform grid, independent of the
// log-grid + refinement path under test.
double brute_force_min_re(const RationalDelaySystem& sys, double omega_max, std::size_t count) {
    double best = sys.response(1e-9).real();
    for (std::size_t i = 1; i <= count; ++i) {
        const double w = omega_max * static_cast<double>(i) / static_cast<double>(count);
        best = std::min(best, sys.response(w).real());
    }
    return best;
}

}  // namespace

TEST_CASE("polynomial roots via the companion matrix") {
    const auto roots = polynomial_roots(std::vector<double>{1.0, 3.0, 2.0});
    REQUIRE(roots.size() == 2);
    double lo = std::min(roots[0].real(), roots[1].real());
    double hi = std::max(roots[0].real(), roots[1].real());
    CHECK(lo == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(hi == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(roots[0].imag()) < 1e-9);

    CHECK(polynomial_roots(std::vector<double>{5.0}).empty());
    CHECK_THROWS_AS(polynomial_roots(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("rational system construction and response") {
    CHECK_THROWS_AS(RationalDelaySystem({1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(RationalDelaySystem({1.0}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(RationalDelaySystem({1.0, 0.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(RationalDelaySystem({1.0}, {1.0, 1.0}, -0.1), std::invalid_argument);

    const RationalDelaySystem lag = first_order();
    CHECK(lag.response(0.0) == std::complex<double>(1.0, 0.0));
    CHECK(lag.response(1.0).real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(lag.response(1.0).imag() == doctest::Approx(-0.5).epsilon(1e-15));

    const RationalDelaySystem pure_delay({1.0}, {1.0}, 0.5);
    const auto at_pi = pure_delay.response(M_PI);
    CHECK(at_pi.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(at_pi.imag() == doctest::Approx(-1.0).epsilon(1e-12));

    const RationalDelaySystem integrator({1.0}, {1.0, 0.0});
    CHECK_THROWS_AS(integrator.response(0.0), std::domain_error);
}

TEST_CASE("stability flag from denominator roots") {
    CHECK(first_order().is_stable());
    CHECK(RationalDelaySystem({1.0}, {1.0, 2.0, 1.0}).is_stable());
    CHECK(RationalDelaySystem({2.0}, {1.0}).is_stable());
    CHECK_FALSE(RationalDelaySystem({1.0}, {1.0, -1.0}).is_stable());
    CHECK_FALSE(RationalDelaySystem({1.0}, {1.0, 0.0}).is_stable());
}

TEST_CASE("frequency grid invariants") {
    CHECK_THROWS_AS(FrequencyGrid(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(FrequencyGrid(std::vector<double>{1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(FrequencyGrid(std::vector<double>{-1.0, 1.0}), std::invalid_argument);
    const auto grid = FrequencyGrid::analysis_default();
    CHECK(grid.omegas.size() == 2000);
    CHECK(grid.omegas.front() == doctest::Approx(1e-3));
    CHECK(grid.omegas.back() == doctest::Approx(1e4));
}

TEST_CASE("ifp index") {
    const auto grid = FrequencyGrid::analysis_default();

    CHECK(ifp_index(RationalDelaySystem({1.0}, {1.0}), grid).value ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto lag = ifp_index(first_order(), grid);
    CHECK(lag.value >= 0.0);
    CHECK(lag.value < 1e-6);  // infimum 0 approached as omega grows

    SUBCASE("dead time makes the lag non-passive") {
        const RationalDelaySystem delayed = first_order(1.0, 0.5);
        const auto idx = ifp_index(delayed, grid);
        CHECK(idx.value < 0.0);
        const double reference = brute_force_min_re(delayed, 50.0, 1'000'000);
        CHECK(idx.value == doctest::Approx(reference).epsilon(1e-4));
    }

    SUBCASE("unstable systems are rejected") {
        CHECK_THROWS_AS(ifp_index(RationalDelaySystem({1.0}, {1.0, -1.0}), grid),
                        std::domain_error);
    }
}

TEST_CASE("ofp index") {
    const auto grid = FrequencyGrid::analysis_default();
    CHECK(ofp_index(RationalDelaySystem({1.0}, {1.0}), grid).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ofp_index(RationalDelaySystem({2.0}, {1.0}), grid).value ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ofp_index(first_order(), grid).value == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(ofp_index(RationalDelaySystem({0.0}, {1.0, 1.0}), grid),
                    std::domain_error);

    SUBCASE("ofp equals ifp of the reciprocal system") {
        const RationalDelaySystem biproper({1.0, 2.0}, {1.0, 1.0});
        const RationalDelaySystem reciprocal({1.0, 1.0}, {1.0, 2.0});
        CHECK(ofp_index(biproper, grid).value ==
              doctest::Approx(ifp_index(reciprocal, grid).value).epsilon(1e-9));
    }
}

TEST_CASE("l2 gain") {
    const auto grid = FrequencyGrid::analysis_default();
    CHECK(l2_gain(RationalDelaySystem({2.0}, {1.0}), grid).value ==
          doctest::Approx(2.0).epsilon(1e-12));

    const auto lag = l2_gain(first_order(), grid);
    CHECK(lag.value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(lag.omega <= 2e-3);  // gain peaks at DC

    const auto biproper = l2_gain(RationalDelaySystem({1.0, 2.0}, {1.0, 1.0}), grid);
    CHECK(biproper.value == doctest::Approx(2.0).epsilon(1e-4));

    SUBCASE("dead time leaves the magnitude untouched") {
        CHECK(l2_gain(first_order(1.0, 0.7), grid).value ==
              doctest::Approx(lag.value).epsilon(1e-9));
    }
}

TEST_CASE("index inequalities and grid monotonicity") {
    const auto grid = FrequencyGrid::analysis_default();
    const std::vector<RationalDelaySystem> systems{
        first_order(), first_order(2.0), first_order(1.0, 0.5),
        RationalDelaySystem({1.0, 2.0}, {1.0, 1.0}),
        RationalDelaySystem({1.0}, {1.0, 2.0, 1.0}, 0.2)};
    for (const auto& sys : systems) {
        CHECK(ifp_index(sys, grid).value <= l2_gain(sys, grid).value + 1e-12);
    }

    // the raw sweep can only go down when points are added
    const auto& fine = grid.omegas;
    std::vector<double> coarse;
    for (std::size_t i = 0; i < fine.size(); i += 4) coarse.push_back(fine[i]);
    const FrequencyGrid coarse_grid(coarse);
    for (const auto& sys : systems) {
        CHECK(ifp_index(sys, coarse_grid, false).value >=
              ifp_index(sys, grid, false).value - 1e-15);
        CHECK(ifp_index(sys, grid, true).value <= ifp_index(sys, grid, false).value + 1e-15);
    }
}

TEST_CASE("nyquist point export") {
    const FrequencyGrid grid(std::vector<double>{0.5, 1.0, 2.0});

    for (const auto& p : nyquist_points(RationalDelaySystem({1.0}, {1.0}), grid)) {
        CHECK(p.value == std::complex<double>(1.0, 0.0));
    }

    const auto pts = nyquist_points(first_order(), grid);
    CHECK(pts[1].omega == 1.0);
    CHECK(pts[1].value.real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pts[1].value.imag() == doctest::Approx(-0.5).epsilon(1e-12));

    const auto inv = nyquist_points(first_order(), grid, true);
    CHECK(inv[1].value.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inv[1].value.imag() == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(nyquist_points(RationalDelaySystem({0.0}, {1.0}), grid, true),
                    std::domain_error);

    SUBCASE("nonnegative ifp implies a right-half-plane locus") {
        const auto dense = FrequencyGrid::analysis_default();
        REQUIRE(ifp_index(first_order(), dense).value >= 0.0);
        for (const auto& p : nyquist_points(first_order(), dense)) {
            CHECK(p.value.real() >= -1e-12);
        }
    }
}

TEST_CASE("finite-gain interconnection check") {
    CHECK(check_fgs_interconnection({-0.2, -0.1}, {0.5, 0.5}));
    CHECK_FALSE(check_fgs_interconnection({0.0, 0.0}, {0.0, 0.0}));
    CHECK_FALSE(check_fgs_interconnection({1.0, 1.0}, {-2.0, 0.0}));
}

TEST_CASE("measured indices certify recorded traces") {
    // band-limited random input through an exactly discretized system
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> amp(0.2, 1.0);
    std::uniform_real_distribution<double> freq(0.2, 4.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::vector<std::array<double, 3>> tones;
    for (int i = 0; i < 8; ++i) tones.push_back({amp(rng), freq(rng), phase(rng)});
    auto input = [&](double t) {
        double s = 0.0;
        for (const auto& tone : tones) s += tone[0] * std::sin(tone[1] * t + tone[2]);
        return s;
    };

    const double dt = 1e-3;
    const double horizon = 20.0;
    const auto steps = static_cast<std::size_t>(horizon / dt);

    SUBCASE("strictly proper lag with nu ~ 0") {
        FirstOrderLag lag(1.0, 1.0);
        SignalTrace u(0.0, dt, 1), y(0.0, dt, 1);
        for (std::size_t n = 0; n <= steps; ++n) {
            const double un = input(static_cast<double>(n) * dt);
            u.push_back(un);
            y.push_back(lag.step(un, dt));
        }
        const double energy = l2_norm_sq(u, horizon);
        CHECK(dissipation_margin(u, y, {0.0, 0.0}, u.sample_times()) >= -1e-3 * energy);
    }

    SUBCASE("biproper system with nu = 1") {
        const RationalDelaySystem biproper({1.0, 2.0}, {1.0, 1.0});  // 1 + 1/(s+1)
        const double nu = ifp_index(biproper, FrequencyGrid::analysis_default()).value;
        CHECK(nu == doctest::Approx(1.0).epsilon(1e-6));

        FirstOrderLag lag(1.0, 1.0);
        SignalTrace u(0.0, dt, 1), y(0.0, dt, 1);
        for (std::size_t n = 0; n <= steps; ++n) {
            const double un = input(static_cast<double>(n) * dt);
            u.push_back(un);
            y.push_back(un + lag.step(un, dt));
        }
        const double energy = l2_norm_sq(u, horizon);
        CHECK(dissipation_margin(u, y, {nu, 0.0}, u.sample_times()) >= -1e-2 * energy);
    }
}
