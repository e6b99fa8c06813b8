#include "doctest.h"

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include "pacosim/lti_analysis.hpp"
#include "pacosim/passivation.hpp"
#include "pacosim/signal_trace.hpp"

using namespace pacosim;

namespace {

const PassivationMatrix kTable3{8.6, 3.47, 16.51, 13.71};

// Band-limited multi-tone input, deterministic per seed.
std::function<double(double)> random_input(unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> amp(0.2, 1.0);
    std::uniform_real_distribution<double> freq(0.2, 4.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::vector<std::array<double, 3>> tones;
    for (int i = 0; i < 6; ++i) tones.push_back({amp(rng), freq(rng), phase(rng)});
    return [tones](double t) {
        double s = 0.0;
        for (const auto& tone : tones) s += tone[0] * std::sin(tone[1] * t + tone[2]);
        return s;
    };
}

}  // namespace

TEST_CASE("passivation matrix invariants") {
    CHECK_THROWS_AS(PassivationMatrix(1.0, 1.0, 1.0, 1.0), std::invalid_argument);  // singular
    CHECK_THROWS_AS(PassivationMatrix(1.0, 0.0, 0.0, std::nan("")), std::invalid_argument);
    CHECK(PassivationMatrix(1.0, -1.0, 1.0, 1.0).det() == doctest::Approx(2.0));
}

TEST_CASE("theorem case checks") {
    SUBCASE("case 1: plain passivity") {
        CHECK(check_case({1.0, -1.0, 1.0, 1.0}, 0.5, PassivationCase::passive()));
        CHECK_FALSE(check_case({1.0, -1.0, 1.0, 1.0}, 1.5, PassivationCase::passive()));
        CHECK_FALSE(check_case({1.0, -1.0, 2.0, 1.0}, 0.5, PassivationCase::passive()));
    }

    SUBCASE("case 2: OSP with the reported final matrix") {
        CHECK(check_case(kTable3, 0.5, PassivationCase::osp()));
        CHECK_FALSE(check_case({1.0, -1.0, 1.0, 1.0}, 0.5, PassivationCase::osp()));
    }

    SUBCASE("case 3: ISP") {
        // m12*m21 > m11*m22 > 0 and m11 >= m12*gamma > 0
        CHECK(check_case({1.0, 1.5, 2.0, 1.0}, 0.5, PassivationCase::isp()));
        CHECK_FALSE(check_case({2.0, 1.0, 1.0, 1.0}, 0.5, PassivationCase::isp()));
    }

    SUBCASE("case 4: VSP") {
        CHECK(check_case({1.0, 0.0, 1.0, 1.0}, 0.5, PassivationCase::vsp(0.5)));
        CHECK_FALSE(check_case({1.0, 0.0, 0.5, 1.0}, 0.9, PassivationCase::vsp(0.5)));
        CHECK_THROWS_AS(check_case({1.0, 0.0, 1.0, 1.0}, 0.5,
                                   {PassivationKind::Vsp, std::nullopt}),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_case({1.0, 0.0, 1.0, 1.0}, 0.5, PassivationCase::vsp(1.5)),
                        std::invalid_argument);
    }

    SUBCASE("gamma must be positive") {
        CHECK_THROWS_AS(check_case(kTable3, 0.0, PassivationCase::osp()),
                        std::invalid_argument);
    }
}

TEST_CASE("achieved levels") {
    const SupplyRateSpec osp = achieved_levels(kTable3, PassivationCase::osp());
    CHECK(osp.epsilon == 0.0);
    CHECK(osp.delta == doctest::Approx(0.5 * (8.6 / 16.51 + 3.47 / 13.71)).epsilon(1e-12));

    const SupplyRateSpec vsp =
        achieved_levels({1.0, 0.0, 1.0, 1.0}, PassivationCase::vsp(0.5));
    CHECK(vsp.epsilon == doctest::Approx(0.25));
    CHECK(vsp.delta == doctest::Approx(0.5));

    const SupplyRateSpec passive =
        achieved_levels({1.0, -1.0, 1.0, 1.0}, PassivationCase::passive());
    CHECK(passive.epsilon == 0.0);
    CHECK(passive.delta == 0.0);

    const SupplyRateSpec isp = achieved_levels({1.0, 1.5, 2.0, 1.0}, PassivationCase::isp());
    CHECK(isp.epsilon == doctest::Approx(0.5 * (2.0 / 1.0 + 1.0 / 1.5)).epsilon(1e-12));
    CHECK(isp.delta == 0.0);

    CHECK_THROWS_AS(achieved_levels({0.5, 0.0, 1.0, 1.0}, PassivationCase::isp()),
                    std::domain_error);
}

TEST_CASE("case violation hinge") {
    CHECK(case_violation(kTable3, 0.5, PassivationCase::osp()) == 0.0);
    // m12*m21 = -1 while the remaining OSP inequalities hold
    const PassivationMatrix bad{2.0, -1.0, 1.0, 1.0};
    CHECK(case_violation(bad, 0.5, PassivationCase::osp()) == doctest::Approx(1.0));
}

TEST_CASE("case-1 matrices are automatically invertible") {
    // m11 = m21, m12 = -m22 gives det = 2*m11*m22 > 0 whenever the case holds
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double m22 = dist(rng);
        const double m11 = m22 * 0.5 * (1.0 + dist(rng));  // >= m22*gamma for gamma <= 0.5
        const PassivationMatrix m{m11, -m22, m11, m22};
        if (check_case(m, 0.5, PassivationCase::passive())) {
            CHECK(m.det() == doctest::Approx(2.0 * m11 * m22));
            CHECK(m.det() > 0.0);
        }
    }
}

TEST_CASE("wrapped system step semantics") {
    SUBCASE("identity transform reproduces the inner system") {
        FirstOrderLag inner(1.0, 0.5);
        FirstOrderLag reference(1.0, 0.5);
        WrappedSystem wrapped(inner, {1.0, 0.0, 0.0, 1.0});
        for (int n = 0; n < 100; ++n) {
            const double u0 = std::sin(0.05 * n);
            CHECK(wrapped.transform_step(u0, 0.01) ==
                  doctest::Approx(reference.step(u0, 0.01)).epsilon(1e-15));
        }
    }

    SUBCASE("fixed point of the one-step feedback loop") {
        // unit static inner system y = u; M = (2,1;1,1):
        // u = (1 - y)/2 settles at u = y = 1/3, so y0 = u + y = 2/3
        struct Unit : SisoSystem {
            double step(double u, double) override { return u; }
            void reset() override {}
            double feedthrough() const override { return 1.0; }
        } unit;
        WrappedSystem wrapped(unit, {2.0, 1.0, 1.0, 1.0});
        CHECK(wrapped.contraction_ok());  // |m12/m11| * 1 = 0.5 < 1
        double y0 = 0.0;
        for (int n = 0; n < 200; ++n) y0 = wrapped.transform_step(1.0, 0.01);
        CHECK(y0 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(wrapped.last_inner_output() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

        WrappedSystem marginal(unit, {1.0, -1.0, 1.0, 1.0});
        CHECK_FALSE(marginal.contraction_ok());  // |m12/m11| * 1 = 1
    }

    SUBCASE("zero input from zero state stays zero") {
        FirstOrderLag inner(2.0, 0.3);
        WrappedSystem wrapped(inner, {1.0, -1.0, 1.0, 1.0});
        for (int n = 0; n < 50; ++n) CHECK(wrapped.transform_step(0.0, 0.01) == 0.0);
    }

    SUBCASE("linearity: doubling the input doubles the output") {
        FirstOrderLag a(1.5, 0.4), b(1.5, 0.4);
        WrappedSystem wa(a, {2.0, 0.5, 1.0, 1.0});
        WrappedSystem wb(b, {2.0, 0.5, 1.0, 1.0});
        const auto input = random_input(31);
        for (int n = 0; n < 400; ++n) {
            const double u0 = input(0.01 * n);
            const double y1 = wa.transform_step(u0, 0.01);
            const double y2 = wb.transform_step(2.0 * u0, 0.01);
            CHECK(y2 == doctest::Approx(2.0 * y1).epsilon(1e-9));
        }
    }

    SUBCASE("m11 = 0 is a wiring error") {
        FirstOrderLag inner(1.0, 0.5);
        CHECK_THROWS_AS(WrappedSystem(inner, {0.0, 1.0, 1.0, 0.5}), std::domain_error);
    }
}

TEST_CASE("transformed frequency response") {
    const RationalDelaySystem lag({1.0}, {1.0, 1.0});

    SUBCASE("identity matrix reproduces the raw response") {
        const TransformedFrequencySystem sigma0(lag, {1.0, 0.0, 0.0, 1.0});
        for (double w : {0.0, 0.3, 1.0, 7.0}) {
            CHECK(sigma0.response(w) == lag.response(w));
        }
    }

    SUBCASE("singular denominator is reported") {
        const RationalDelaySystem unit({1.0}, {1.0});
        const TransformedFrequencySystem sigma0(unit, {1.0, -1.0, 1.0, 1.0});
        CHECK_THROWS_AS(sigma0.response(1.0), std::domain_error);
    }
}

TEST_CASE("theorem holds on recorded traces") {
    // wrapped first-order lags with case-passing matrices must dissipate at
    // the achieved levels
    const double dt = 1e-3;
    const double horizon = 20.0;
    const auto steps = static_cast<std::size_t>(horizon / dt);
    const double gamma = 0.5;

    const struct {
        PassivationMatrix m;
        PassivationCase pcase;
    } setups[] = {
        {{1.0, -1.0, 1.0, 1.0}, PassivationCase::passive()},
        {kTable3, PassivationCase::osp()},
        {{1.0, 1.5, 2.0, 1.0}, PassivationCase::isp()},
        {{1.0, 0.0, 1.0, 1.0}, PassivationCase::vsp(0.5)},
    };

    for (const auto& setup : setups) {
        CAPTURE(to_string(setup.pcase.kind));
        REQUIRE(check_case(setup.m, gamma, setup.pcase));
        const SupplyRateSpec levels = achieved_levels(setup.m, setup.pcase);

        FirstOrderLag inner(0.45, 0.5);  // gain 0.45 <= gamma
        WrappedSystem wrapped(inner, setup.m);
        const auto input = random_input(101);

        SignalTrace u0(0.0, dt, 1), y0(0.0, dt, 1);
        for (std::size_t n = 0; n <= steps; ++n) {
            const double u = input(static_cast<double>(n) * dt);
            u0.push_back(u);
            y0.push_back(wrapped.transform_step(u, dt));
        }
        const double energy = l2_norm_sq(u0, horizon);
        const double margin = dissipation_margin(u0, y0, levels, u0.sample_times());
        CHECK(margin >= -1e-3 * energy);
    }
}
