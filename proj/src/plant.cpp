#include "pacosim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pacosim {

VehicleState vehicle_step(const VehicleState& s, double a_cmd, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    VehicleState next = s;
    next.a += (a_cmd - next.a) * dt / kActuatorLagS;
    next.a = std::clamp(next.a, kAccelMinMs2, kAccelMaxMs2);
    next.v = std::max(0.0, next.v + next.a * dt);
    next.x += next.v * dt;
    return next;
}

double lead_velocity_kmh(double t, double horizon, LeadVariant variant) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (t < 0.0 || t > horizon) throw std::domain_error("time outside the experiment window");

    const double third = horizon / 3.0;
    const double half = horizon / 2.0;
    const double two_thirds = 2.0 * horizon / 3.0;
    const double five_sixths = 5.0 * horizon / 6.0;

    if (t <= third) return 60.0;
    if (t <= half) return 60.0 + (150.0 / horizon) * (t - third);
    if (t < two_thirds) return 85.0;
    if (t <= five_sixths) {
        if (variant == LeadVariant::AsWritten) {
            return 55.0 + (150.0 / horizon) * (t - five_sixths);
        }
        return 85.0 - (180.0 / horizon) * (t - two_thirds);
    }
    return 55.0;
}

DelayedPid::DelayedPid(const PidGains& gains, double delay_s) : gains_(gains), delay_(delay_s) {
    if (delay_ < 0.0) throw std::invalid_argument("delay must be nonnegative");
}

double DelayedPid::step_at(double error, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    integ_ += error * dt;
    const double deriv = (error - prev_err_) / dt;
    prev_err_ = error;
    const double raw = gains_.kp * error + gains_.ki * integ_ + gains_.kd * deriv;
    buffer_.emplace_back(t, raw);

    // newest buffered command that has cleared the dead time
    const double release = t - delay_ + 1e-12;
    while (buffer_.size() >= 2 && buffer_[1].first <= release) buffer_.pop_front();
    if (!buffer_.empty() && buffer_.front().first <= release) return buffer_.front().second;
    return 0.0;
}

double DelayedPid::step(double error, double dt) {
    const double out = step_at(error, clock_, dt);
    clock_ += dt;
    return out;
}

void DelayedPid::reset() {
    integ_ = 0.0;
    prev_err_ = 0.0;
    clock_ = 0.0;
    buffer_.clear();
}

double DelayedPid::feedthrough() const { return delay_ > 0.0 ? 0.0 : gains_.kp; }

RationalDelaySystem DelayedPid::rational_form() const {
    const double leak = kPidIntegratorLeak;
    const double tf = kPidDerivativeFilterS;
    // kp + ki/(s+leak) + kd*s/(tf*s+1), over the common denominator
    const std::vector<double> den{tf, 1.0 + leak * tf, leak};
    const std::vector<double> num{gains_.kp * tf + gains_.kd,
                                  gains_.kp * (1.0 + leak * tf) + gains_.ki * tf +
                                      gains_.kd * leak,
                                  gains_.kp * leak + gains_.ki};
    return RationalDelaySystem(num, den, delay_);
}

double pid_step(DelayedPid& pid, double error, double t, double dt) {
    return pid.step_at(error, t, dt);
}

AccMode acc_supervisor(double gap, double safe_distance, double vel_cmd, double spc_cmd) {
    if (!(safe_distance > 0.0)) throw std::invalid_argument("safe distance must be positive");
    AccMode out{};
    out.mode = gap < safe_distance ? ControlMode::Spacing : ControlMode::Velocity;
    out.magnitude = out.mode == ControlMode::Spacing ? spc_cmd : vel_cmd;
    out.command = out.magnitude >= 0.0 ? ActuatorCommand::Throttle : ActuatorCommand::Brake;
    return out;
}

namespace {

double abs_error_integral(const SignalTrace& a, const SignalTrace& b, double t_end) {
    if (a.dim() != 1 || b.dim() != 1) {
        throw std::invalid_argument("cost traces must be scalar");
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(a.dt()));
    if (std::abs(a.dt() - b.dt()) > tol || std::abs(a.t0() - b.t0()) > tol) {
        throw std::invalid_argument("cost traces are not on the same grid");
    }
    const std::size_t k_end = std::min(a.index_at(t_end), b.index_at(t_end));
    double acc = 0.0;
    double prev = std::abs(a.value(0) - b.value(0));
    for (std::size_t k = 1; k <= k_end; ++k) {
        const double cur = std::abs(a.value(k) - b.value(k));
        acc += a.dt() * 0.5 * (prev + cur);
        prev = cur;
    }
    return acc;
}

PidGains scaled_to_half_gain(const PidGains& base) {
    const DelayedPid probe(base, 0.0);
    const double gain =
        l2_gain(probe.rational_form(), FrequencyGrid::analysis_default()).value;
    const double scale = 0.5 / gain;
    return {base.kp * scale, base.ki * scale, base.kd * scale};
}

}  // namespace

double tracking_cost(const SignalTrace& v_h, const SignalTrace& v_des, double t_end) {
    return abs_error_integral(v_h, v_des, t_end);
}

double spacing_cost(const SignalTrace& x_h, const SignalTrace& x_des, double t_end) {
    return abs_error_integral(x_h, x_des, t_end);
}

PidGains default_velocity_pid_gains() {
    static const PidGains gains = scaled_to_half_gain({0.3, 0.05, 0.01});
    return gains;
}

PidGains default_spacing_pid_gains() {
    static const PidGains gains = scaled_to_half_gain({0.5, 0.02, 0.05});
    return gains;
}

}  // namespace pacosim
