#pragma once

#include <complex>
#include <optional>
#include <string>

#include "pacosim/lti_analysis.hpp"
#include "pacosim/signal_trace.hpp"

namespace pacosim {

/// 2x2 input-output transformation [u0; y0] = M [u; y]. Must be invertible.
struct PassivationMatrix {
    double m11, m12, m21, m22;

    PassivationMatrix(double m11, double m12, double m21, double m22);

    double det() const { return m11 * m22 - m12 * m21; }
};

enum class PassivationKind { Passive, Osp, Isp, Vsp };

PassivationKind passivation_kind_from_string(const std::string& name);
std::string to_string(PassivationKind kind);

/// Target case for the transformation. The free parameter `a` in (0,1) is
/// required for VSP and meaningless otherwise.
struct PassivationCase {
    PassivationKind kind = PassivationKind::Passive;
    std::optional<double> a;

    static PassivationCase passive() { return {PassivationKind::Passive, std::nullopt}; }
    static PassivationCase osp() { return {PassivationKind::Osp, std::nullopt}; }
    static PassivationCase isp() { return {PassivationKind::Isp, std::nullopt}; }
    static PassivationCase vsp(double a) { return {PassivationKind::Vsp, a}; }
};

/// Evaluates the chosen case's inequalities for an inner system of L2 gain
/// `gamma`. Strict inequalities carry a 1e-12 slack, equalities a 1e-9
/// relative tolerance.
bool check_case(const PassivationMatrix& m, double gamma, const PassivationCase& pcase);

/// Sum of positive parts of the violated case inequalities; zero when the
/// case holds. Feeds the constraint penalty.
double case_violation(const PassivationMatrix& m, double gamma, const PassivationCase& pcase);

/// Passivity levels guaranteed once check_case passes.
SupplyRateSpec achieved_levels(const PassivationMatrix& m, const PassivationCase& pcase);

/// A causal SISO system advanced one fixed step at a time.
class SisoSystem {
public:
    virtual ~SisoSystem() = default;
    virtual double step(double input, double dt) = 0;
    virtual void reset() = 0;
    /// Instantaneous input-to-output coupling, used by the wrapped-loop
    /// contraction warning. Zero for strictly causal systems.
    virtual double feedthrough() const { return 0.0; }
};

/// First-order lag K/(tau*s + 1), stepped with an exact zero-order hold.
class FirstOrderLag : public SisoSystem {
public:
    FirstOrderLag(double gain, double time_constant);

    double step(double input, double dt) override;
    void reset() override { state_ = 0.0; }

    RationalDelaySystem rational_form() const;

private:
    double gain_;
    double tau_;
    double state_ = 0.0;
};

/// The transformation M wired around an inner system per [u0; y0] = M [u; y].
/// The feedback path is broken with a one-step delay on the inner output.
class WrappedSystem {
public:
    WrappedSystem(SisoSystem& inner, const PassivationMatrix& m);

    /// u = (u0 - m12*y_prev)/m11; y = inner(u); y0 = m21*u + m22*y.
    double transform_step(double u0, double dt);

    void set_matrix(const PassivationMatrix& m);
    const PassivationMatrix& matrix() const { return m_; }
    double last_inner_output() const { return y_prev_; }

    /// One-step-delay loop contracts iff |m12/m11| * |inner feedthrough| < 1.
    bool contraction_ok() const;

    void reset();

private:
    SisoSystem* inner_;
    PassivationMatrix m_;
    double y_prev_ = 0.0;
};

/// Closed-form frequency response of the transformed loop:
/// S0(jw) = (m21 + m22 G(jw)) / (m11 + m12 G(jw)).
class TransformedFrequencySystem {
public:
    TransformedFrequencySystem(RationalDelaySystem inner, const PassivationMatrix& m);

    std::complex<double> response(double omega) const;
    ResponseFn fn() const;

    const RationalDelaySystem& inner() const { return inner_; }
    const PassivationMatrix& matrix() const { return m_; }

private:
    RationalDelaySystem inner_;
    PassivationMatrix m_;
};

}  // namespace pacosim
