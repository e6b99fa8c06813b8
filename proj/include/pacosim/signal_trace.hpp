#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pacosim {

/// Uniformly sampled signal of dimension m >= 1. Sample k lives at t0 + k*dt.
class SignalTrace {
public:
    SignalTrace(double t0, double dt, std::size_t dim = 1);

    /// Convenience builder for scalar traces.
    static SignalTrace scalar(double t0, double dt, std::vector<double> samples);

    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return data_.empty(); }

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
    double end_time() const;

    void push_back(double value);
    void push_back(std::span<const double> sample);

    std::span<const double> sample(std::size_t k) const;
    double value(std::size_t k, std::size_t channel = 0) const;

    /// Every sample time, in order. The default dissipation grid.
    std::vector<double> sample_times() const;

    /// Index of the last sample at or before t_end. Throws if t_end < t0 or
    /// t_end lies beyond the trace.
    std::size_t index_at(double t_end) const;

    /// CSV with header `t,<ch0>,<ch1>,...`; values round-trip exactly.
    void write_csv(std::ostream& os, std::span<const std::string> channel_names = {}) const;
    static SignalTrace read_csv(std::istream& is);

private:
    double t0_;
    double dt_;
    std::size_t dim_;
    std::vector<double> data_;  // row-major, size() * dim_
};

/// IF-OFP supply-rate levels. Negative values express a shortage of passivity.
struct SupplyRateSpec {
    double epsilon = 0.0;  // input-feedforward level
    double delta = 0.0;    // output-feedback level
};

/// Keeps samples at times <= t_end; the signal is treated as zero beyond.
SignalTrace truncate(const SignalTrace& x, double t_end);

/// Trapezoidal approximation of the inner product of x and y over [t0, t_end].
double inner_product(const SignalTrace& x, const SignalTrace& y, double t_end);

/// inner_product(x, x, t_end); nonnegative.
double l2_norm_sq(const SignalTrace& x, double t_end);

/// Minimum over the truncation grid of the accumulated supply
/// u'y - delta*y'y - epsilon*u'u. A nonnegative result certifies the recorded
/// run as IF-OFP(epsilon, delta).
double dissipation_margin(const SignalTrace& u, const SignalTrace& y,
                          const SupplyRateSpec& spec, std::span<const double> grid);

}  // namespace pacosim
