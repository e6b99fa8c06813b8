#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pacosim/passivation.hpp"
#include "pacosim/plant.hpp"

namespace pacosim {

enum class LeadProfile { None, AsWritten, Continuous };

struct EsChannelConfig {
    double a;
    double omega;
    double theta0;
};

struct EsConfig {
    double k = 1.0;
    double omega_h = 3.0;
    double omega_l = 1.0;
    std::vector<EsChannelConfig> channels;  // m11, m12, m21, m22 order
};

/// Passivation setup for one controller: a fixed matrix, or an ES loop tuning
/// the four entries online from the channels' theta0.
struct ControllerPassivation {
    std::optional<PassivationMatrix> matrix;
    std::optional<EsConfig> es;

    PassivationMatrix initial_matrix() const;
};

struct PassivationConfig {
    bool enabled = false;
    PassivationCase pcase = PassivationCase::osp();
    double penalty_weight = 10.0;
    std::optional<ControllerPassivation> velocity;
    std::optional<ControllerPassivation> spacing;
};

/// One experiment definition. Speeds are km/h as in the scenario files; all
/// internal math is SI.
struct Scenario {
    double horizon_s = 120.0;
    double dt_s = 0.01;
    double v_des_kmh = 80.0;
    double v_init_kmh = 60.0;
    double safe_distance_m = 10.0;
    double initial_gap_m = 30.0;
    LeadProfile lead_profile = LeadProfile::Continuous;
    std::array<double, 2> delay_range_s{0.4, 0.6};
    std::uint64_t seed = 0;
    std::optional<PidGains> velocity_pid;  // defaults when absent
    std::optional<PidGains> spacing_pid;
    PassivationConfig passivation;

    static Scenario from_json(const nlohmann::json& j);
    static Scenario from_json_text(const std::string& text);
    nlohmann::json to_json() const;

    /// Canonical serialization with the passivation subtree removed; two
    /// scenarios are comparable iff these agree.
    std::string masked_canonical() const;

    /// Throws if the scenario is internally inconsistent (bad dithers,
    /// singular matrices, invalid ranges).
    void validate() const;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace pacosim
