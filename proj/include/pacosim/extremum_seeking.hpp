#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pacosim {

enum class FilterKind { Lowpass, Washout };

struct FilterResult {
    double state;
    double output;
};

/// One step of a first-order filter discretized by exact pole mapping.
/// Lowpass realizes w/(s+w); washout realizes s/(s+w) as input minus the
/// lowpassed state.
FilterResult first_order_filter_step(double state, double input, double cutoff, double dt,
                                     FilterKind kind);

/// True iff no dither frequency equals the sum of two others (p = q included),
/// within relative tolerance 1e-6. Guards demodulation channels from aliasing.
bool validate_dither(std::span<const double> omegas);

struct EsChannel {
    double a;          // dither amplitude, parameter units
    double omega;      // dither frequency, rad/s
    double theta_hat;  // current estimate
    double hp_state = 0.0;
    double lp_state = 0.0;
};

/// Perturbation extremum seeking for 1..4 parameters: washout, sinusoidal
/// demodulation, low-pass and gradient-descent integration per channel.
class EsLoop {
public:
    EsLoop(std::vector<EsChannel> channels, double gain_k, double omega_h, double omega_l);

    /// Advances one step on the measured cost and returns the probe vector
    /// theta_i = theta_hat_i + a_i*sin(omega_i*t) to apply next.
    std::vector<double> step(double cost, double dt);

    /// Probe values at the current time, without stepping.
    std::vector<double> probes() const;
    std::vector<double> estimates() const;

    std::span<const EsChannel> channels() const { return channels_; }
    double gain_k() const { return k_; }
    double omega_h() const { return omega_h_; }
    double omega_l() const { return omega_l_; }
    double time() const { return t_; }

private:
    std::vector<EsChannel> channels_;
    double k_;
    double omega_h_;
    double omega_l_;
    double t_ = 0.0;
};

}  // namespace pacosim
