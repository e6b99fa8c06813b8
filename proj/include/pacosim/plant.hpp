#pragma once

#include <deque>
#include <utility>

#include "pacosim/lti_analysis.hpp"
#include "pacosim/passivation.hpp"
#include "pacosim/signal_trace.hpp"

namespace pacosim {

inline constexpr double kKmhToMs = 1.0 / 3.6;

// Longitudinal surrogate constants.
inline constexpr double kActuatorLagS = 0.5;
inline constexpr double kAccelMinMs2 = -8.0;
inline constexpr double kAccelMaxMs2 = 4.0;

// Realizable-form constants for the PID's analyzable transfer function.
inline constexpr double kPidIntegratorLeak = 0.1;     // rad/s
inline constexpr double kPidDerivativeFilterS = 0.1;  // seconds

struct VehicleState {
    double x = 0.0;  // position, m
    double v = 0.0;  // velocity, m/s (never negative)
    double a = 0.0;  // acceleration, m/s^2, within actuator bounds
};

/// Point mass behind a first-order actuator lag with asymmetric acceleration
/// bounds. Velocity is clamped at zero (no reverse).
VehicleState vehicle_step(const VehicleState& s, double a_cmd, double dt);

enum class LeadVariant { AsWritten, Continuous };

/// Lead-vehicle velocity profile in km/h over a horizon T. AsWritten keeps the
/// source's fourth piece, which jumps from 85 to 30 at t = 2T/3; Continuous
/// replaces it with the 85 -> 55 ramp 85 - (180/T)(t - 2T/3).
double lead_velocity_kmh(double t, double horizon, LeadVariant variant);

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

/// PID with a transport delay on its output, realized as a timestamped FIFO.
class DelayedPid : public SisoSystem {
public:
    DelayedPid(const PidGains& gains, double delay_s);

    /// raw = kp*e + ki*integ + kd*(e - e_prev)/dt, enqueued at time t; returns
    /// the newest buffered command with timestamp <= t - delay (0 until the
    /// pipe fills).
    double step_at(double error, double t, double dt);

    /// SisoSystem entry point; advances an internal clock by dt per call.
    double step(double error, double dt) override;
    void reset() override;
    double feedthrough() const override;

    const PidGains& gains() const { return gains_; }
    double delay() const { return delay_; }

    /// Stable rational approximation used for index/gain analysis: leaky
    /// integrator ki/(s + leak) and filtered derivative kd*s/(tf*s + 1),
    /// with the transport delay carried as dead time.
    RationalDelaySystem rational_form() const;

private:
    PidGains gains_;
    double delay_;
    double integ_ = 0.0;
    double prev_err_ = 0.0;
    double clock_ = 0.0;
    std::deque<std::pair<double, double>> buffer_;  // (timestamp, command)
};

/// Spec-style free-function entry point.
double pid_step(DelayedPid& pid, double error, double t, double dt);

enum class ControlMode { Velocity, Spacing };
enum class ActuatorCommand { Throttle, Brake };

struct AccMode {
    ControlMode mode;
    ActuatorCommand command;
    double magnitude;  // m/s^2
};

/// Spacing mode iff gap < safe_distance; the selected command maps to brake
/// when negative, throttle otherwise.
AccMode acc_supervisor(double gap, double safe_distance, double vel_cmd, double spc_cmd);

/// Trapezoidal integral of |v_h - v_des| over [t0, t_end], in meters.
double tracking_cost(const SignalTrace& v_h, const SignalTrace& v_des, double t_end);

/// Trapezoidal integral of |x_h - x_des| over [t0, t_end].
double spacing_cost(const SignalTrace& x_h, const SignalTrace& x_des, double t_end);

/// Default gains, rescaled so the rational form's L2 gain is 0.5.
PidGains default_velocity_pid_gains();
PidGains default_spacing_pid_gains();

}  // namespace pacosim
