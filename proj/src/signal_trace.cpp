#include "pacosim/signal_trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pacosim {

namespace {

constexpr double kGridSlack = 1e-9;  // fractions of dt, absorbs time round-off

void format_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

void require_aligned(const SignalTrace& x, const SignalTrace& y) {
    const double tol = 1e-12 * std::max(1.0, std::abs(x.dt()));
    if (std::abs(x.dt() - y.dt()) > tol || std::abs(x.t0() - y.t0()) > tol ||
        x.dim() != y.dim()) {
        throw std::invalid_argument("signal traces are not on the same grid");
    }
}

}  // namespace

SignalTrace::SignalTrace(double t0, double dt, std::size_t dim) : t0_(t0), dt_(dt), dim_(dim) {
    if (!(dt > 0.0)) throw std::invalid_argument("trace dt must be positive");
    if (dim == 0) throw std::invalid_argument("trace dimension must be at least 1");
}

SignalTrace SignalTrace::scalar(double t0, double dt, std::vector<double> samples) {
    SignalTrace trace(t0, dt, 1);
    trace.data_ = std::move(samples);
    return trace;
}

double SignalTrace::end_time() const {
    if (empty()) throw std::domain_error("empty trace has no end time");
    return time(size() - 1);
}

void SignalTrace::push_back(double value) {
    if (dim_ != 1) throw std::invalid_argument("scalar push_back on a vector trace");
    data_.push_back(value);
}

void SignalTrace::push_back(std::span<const double> sample) {
    if (sample.size() != dim_) throw std::invalid_argument("sample dimension mismatch");
    data_.insert(data_.end(), sample.begin(), sample.end());
}

std::span<const double> SignalTrace::sample(std::size_t k) const {
    if (k >= size()) throw std::out_of_range("sample index out of range");
    return {data_.data() + k * dim_, dim_};
}

double SignalTrace::value(std::size_t k, std::size_t channel) const {
    if (channel >= dim_) throw std::out_of_range("channel out of range");
    return sample(k)[channel];
}

std::vector<double> SignalTrace::sample_times() const {
    std::vector<double> times(size());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = time(k);
    return times;
}

std::size_t SignalTrace::index_at(double t_end) const {
    if (empty()) throw std::domain_error("empty trace");
    if (t_end < t0_ - kGridSlack * dt_) {
        throw std::domain_error("time precedes the start of the trace");
    }
    const double offset = (t_end - t0_) / dt_ + kGridSlack;
    const auto k = static_cast<std::size_t>(std::floor(std::max(0.0, offset)));
    if (k >= size()) {
        throw std::domain_error("time lies beyond the end of the trace");
    }
    return k;
}

void SignalTrace::write_csv(std::ostream& os, std::span<const std::string> channel_names) const {
    os << "t";
    for (std::size_t c = 0; c < dim_; ++c) {
        os << ',';
        if (c < channel_names.size()) {
            os << channel_names[c];
        } else {
            os << "ch" << c;
        }
    }
    os << '\n';
    for (std::size_t k = 0; k < size(); ++k) {
        format_double(os, time(k));
        for (double v : sample(k)) {
            os << ',';
            format_double(os, v);
        }
        os << '\n';
    }
}

SignalTrace SignalTrace::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("trace CSV is empty");
    std::size_t dim = 0;
    for (char c : line) {
        if (c == ',') ++dim;
    }
    if (dim == 0) throw std::invalid_argument("trace CSV header needs at least one channel");

    std::vector<double> times;
    std::vector<double> data;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(row, cell, ',')) {
            const double v = std::stod(cell);
            if (col == 0) {
                times.push_back(v);
            } else {
                data.push_back(v);
            }
            ++col;
        }
        if (col != dim + 1) throw std::invalid_argument("trace CSV row width mismatch");
    }
    if (times.empty()) throw std::invalid_argument("trace CSV has no samples");
    const double t0 = times.front();
    const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
    SignalTrace trace(t0, dt, dim);
    trace.data_ = std::move(data);
    return trace;
}

SignalTrace truncate(const SignalTrace& x, double t_end) {
    if (x.empty()) throw std::domain_error("cannot truncate an empty trace");
    if (t_end < x.t0() - kGridSlack * x.dt()) {
        throw std::domain_error("truncation time precedes the start of the trace");
    }
    const double offset = (t_end - x.t0()) / x.dt() + kGridSlack;
    std::size_t keep = static_cast<std::size_t>(std::floor(std::max(0.0, offset))) + 1;
    if (keep > x.size()) keep = x.size();

    SignalTrace out(x.t0(), x.dt(), x.dim());
    for (std::size_t k = 0; k < keep; ++k) out.push_back(x.sample(k));
    return out;
}

namespace {

// Running trapezoid of the per-sample integrand z; cumulative[k] holds the
// integral up to sample k. Shared by inner_product and dissipation_margin so
// the two agree bit for bit.
std::vector<double> cumulative_trapezoid(const std::vector<double>& z, double dt) {
    std::vector<double> acc(z.size(), 0.0);
    for (std::size_t k = 1; k < z.size(); ++k) {
        acc[k] = acc[k - 1] + dt * 0.5 * (z[k - 1] + z[k]);
    }
    return acc;
}

double dot_sample(const SignalTrace& x, const SignalTrace& y, std::size_t k) {
    double s = 0.0;
    const auto xs = x.sample(k);
    const auto ys = y.sample(k);
    for (std::size_t c = 0; c < xs.size(); ++c) s += xs[c] * ys[c];
    return s;
}

}  // namespace

double inner_product(const SignalTrace& x, const SignalTrace& y, double t_end) {
    require_aligned(x, y);
    const std::size_t k_end = x.index_at(t_end);
    y.index_at(t_end);  // ensure within both

    std::vector<double> z(k_end + 1);
    for (std::size_t k = 0; k <= k_end; ++k) z[k] = dot_sample(x, y, k);
    return cumulative_trapezoid(z, x.dt()).back();
}

double l2_norm_sq(const SignalTrace& x, double t_end) { return inner_product(x, x, t_end); }

double dissipation_margin(const SignalTrace& u, const SignalTrace& y,
                          const SupplyRateSpec& spec, std::span<const double> grid) {
    require_aligned(u, y);
    if (grid.empty()) throw std::domain_error("dissipation grid is empty");
    if (u.size() != y.size()) throw std::invalid_argument("trace lengths differ");

    std::vector<double> w(u.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = dot_sample(u, y, k) - spec.delta * dot_sample(y, y, k) -
               spec.epsilon * dot_sample(u, u, k);
    }
    const std::vector<double> acc = cumulative_trapezoid(w, u.dt());

    double margin = std::numeric_limits<double>::infinity();
    for (double t_end : grid) {
        margin = std::min(margin, acc[u.index_at(t_end)]);
    }
    return margin;
}

}  // namespace pacosim
