#include "pacosim/extremum_seeking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pacosim {

namespace {

constexpr double kDitherRelTol = 1e-6;
constexpr std::size_t kMaxChannels = 4;

double max_omega(std::span<const EsChannel> channels) {
    double m = 0.0;
    for (const auto& ch : channels) m = std::max(m, ch.omega);
    return m;
}

double min_omega(std::span<const EsChannel> channels) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& ch : channels) m = std::min(m, ch.omega);
    return m;
}

}  // namespace

FilterResult first_order_filter_step(double state, double input, double cutoff, double dt,
                                     FilterKind kind) {
    if (!(cutoff > 0.0)) throw std::invalid_argument("filter cutoff must be positive");
    const double decay = std::exp(-cutoff * dt);
    const double next = decay * state + (1.0 - decay) * input;
    return {next, kind == FilterKind::Lowpass ? next : input - next};
}

bool validate_dither(std::span<const double> omegas) {
    if (omegas.empty()) throw std::domain_error("dither frequency list is empty");
    if (omegas.size() > kMaxChannels) {
        throw std::domain_error("at most four dither channels are supported");
    }
    for (std::size_t p = 0; p < omegas.size(); ++p) {
        for (std::size_t q = p; q < omegas.size(); ++q) {
            const double sum = omegas[p] + omegas[q];
            for (double w : omegas) {
                if (std::abs(sum - w) <= kDitherRelTol * std::max(std::abs(sum), std::abs(w))) {
                    return false;
                }
            }
        }
    }
    return true;
}

EsLoop::EsLoop(std::vector<EsChannel> channels, double gain_k, double omega_h, double omega_l)
    : channels_(std::move(channels)), k_(gain_k), omega_h_(omega_h), omega_l_(omega_l) {
    if (channels_.empty() || channels_.size() > kMaxChannels) {
        throw std::invalid_argument("extremum seeking supports 1 to 4 channels");
    }
    if (!(k_ > 0.0)) throw std::invalid_argument("integrator gain k must be positive");
    if (!(omega_h_ > 0.0) || !(omega_l_ > 0.0)) {
        throw std::invalid_argument("filter cutoffs must be positive");
    }
    std::vector<double> omegas;
    for (const auto& ch : channels_) {
        if (!(ch.a > 0.0)) throw std::invalid_argument("dither amplitude must be positive");
        if (!(ch.omega > 0.0)) throw std::invalid_argument("dither frequency must be positive");
        omegas.push_back(ch.omega);
    }
    // filter cutoffs must sit below every dither frequency
    if (!(omega_l_ < min_omega(channels_)) || !(omega_h_ < min_omega(channels_))) {
        throw std::invalid_argument("filter cutoffs must be below all dither frequencies");
    }
    if (!validate_dither(omegas)) {
        throw std::invalid_argument("dither frequencies violate the sum condition");
    }
}

std::vector<double> EsLoop::step(double cost, double dt) {
    if (!std::isfinite(cost)) {
        throw std::invalid_argument("cost measurement is not finite");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (dt * max_omega(channels_) >= 0.2) {
        throw std::domain_error("dt too coarse for the dither frequencies");
    }

    std::vector<double> probe(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        EsChannel& ch = channels_[i];
        const auto hp = first_order_filter_step(ch.hp_state, cost, omega_h_, dt,
                                                FilterKind::Washout);
        ch.hp_state = hp.state;
        const double demod = hp.output * std::sin(ch.omega * t_);
        const auto lp = first_order_filter_step(ch.lp_state, demod, omega_l_, dt,
                                                FilterKind::Lowpass);
        ch.lp_state = lp.state;
        ch.theta_hat -= k_ * lp.output * dt;  // descent; costs are minimized
        probe[i] = ch.theta_hat + ch.a * std::sin(ch.omega * t_);
    }
    t_ += dt;
    return probe;
}

std::vector<double> EsLoop::probes() const {
    std::vector<double> p(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        p[i] = channels_[i].theta_hat + channels_[i].a * std::sin(channels_[i].omega * t_);
    }
    return p;
}

std::vector<double> EsLoop::estimates() const {
    std::vector<double> e(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) e[i] = channels_[i].theta_hat;
    return e;
}

}  // namespace pacosim
