#include "pacosim/scenario.hpp"

#include <stdexcept>

#include "pacosim/extremum_seeking.hpp"

namespace pacosim {

namespace {

using nlohmann::json;

std::string lead_profile_name(LeadProfile p) {
    switch (p) {
        case LeadProfile::None: return "none";
        case LeadProfile::AsWritten: return "as_written";
        case LeadProfile::Continuous: return "continuous";
    }
    return "none";
}

LeadProfile lead_profile_from_name(const std::string& name) {
    if (name == "none") return LeadProfile::None;
    if (name == "as_written") return LeadProfile::AsWritten;
    if (name == "continuous") return LeadProfile::Continuous;
    throw std::invalid_argument("unknown lead profile: " + name);
}

json matrix_to_json(const PassivationMatrix& m) {
    return json{{"m11", m.m11}, {"m12", m.m12}, {"m21", m.m21}, {"m22", m.m22}};
}

PassivationMatrix matrix_from_json(const json& j) {
    return PassivationMatrix(j.at("m11").get<double>(), j.at("m12").get<double>(),
                             j.at("m21").get<double>(), j.at("m22").get<double>());
}

json pid_to_json(const PidGains& g) {
    return json{{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}};
}

PidGains pid_from_json(const json& j) {
    return {j.at("kp").get<double>(), j.at("ki").get<double>(), j.at("kd").get<double>()};
}

json es_to_json(const EsConfig& es) {
    json channels = json::array();
    for (const auto& ch : es.channels) {
        channels.push_back(json{{"a", ch.a}, {"omega", ch.omega}, {"theta0", ch.theta0}});
    }
    return json{{"k", es.k}, {"omega_h", es.omega_h}, {"omega_l", es.omega_l},
                {"channels", channels}};
}

EsConfig es_from_json(const json& j) {
    EsConfig es;
    es.k = j.at("k").get<double>();
    es.omega_h = j.value("omega_h", 3.0);
    es.omega_l = j.value("omega_l", 1.0);
    for (const auto& ch : j.at("channels")) {
        es.channels.push_back({ch.at("a").get<double>(), ch.at("omega").get<double>(),
                               ch.at("theta0").get<double>()});
    }
    return es;
}

json controller_to_json(const ControllerPassivation& c) {
    json j = json::object();
    if (c.matrix) j["matrix"] = matrix_to_json(*c.matrix);
    if (c.es) j["es"] = es_to_json(*c.es);
    return j;
}

ControllerPassivation controller_from_json(const json& j) {
    ControllerPassivation c;
    if (j.contains("matrix")) c.matrix = matrix_from_json(j.at("matrix"));
    if (j.contains("es")) c.es = es_from_json(j.at("es"));
    return c;
}

void validate_controller(const ControllerPassivation& c, const std::string& label) {
    if (!c.matrix && !c.es) {
        throw std::invalid_argument(label + " passivation needs a matrix or an ES config");
    }
    if (c.es) {
        const EsConfig& es = *c.es;
        if (es.channels.size() != 4) {
            throw std::invalid_argument(label + " ES must tune exactly four parameters");
        }
        std::vector<double> omegas;
        std::vector<EsChannel> channels;
        for (const auto& ch : es.channels) {
            omegas.push_back(ch.omega);
            channels.push_back({ch.a, ch.omega, ch.theta0});
        }
        if (!validate_dither(omegas)) {
            throw std::invalid_argument(label + " dither frequencies violate the sum condition");
        }
        // constructor re-checks amplitudes, cutoffs and the sum condition
        const EsLoop probe(channels, es.k, es.omega_h, es.omega_l);
        (void)probe;
    }
    const PassivationMatrix m = c.initial_matrix();
    if (m.m11 == 0.0) {
        throw std::invalid_argument(label + " initial matrix has m11 = 0");
    }
}

}  // namespace

PassivationMatrix ControllerPassivation::initial_matrix() const {
    if (es) {
        const auto& ch = es->channels;
        if (ch.size() != 4) {
            throw std::invalid_argument("ES config must carry four channels");
        }
        return PassivationMatrix(ch[0].theta0, ch[1].theta0, ch[2].theta0, ch[3].theta0);
    }
    if (matrix) return *matrix;
    throw std::invalid_argument("controller passivation has neither matrix nor ES config");
}

Scenario Scenario::from_json(const nlohmann::json& j) {
    Scenario sc;
    sc.horizon_s = j.at("T_s").get<double>();
    sc.dt_s = j.at("dt_s").get<double>();
    sc.v_des_kmh = j.at("v_des_kmh").get<double>();
    sc.v_init_kmh = j.value("v_init_kmh", 60.0);
    sc.safe_distance_m = j.value("safe_distance_m", 10.0);
    sc.initial_gap_m = j.value("initial_gap_m", 30.0);
    sc.lead_profile = lead_profile_from_name(j.value("lead_profile", std::string("none")));
    if (j.contains("delay_range_s")) {
        const auto& r = j.at("delay_range_s");
        sc.delay_range_s = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
    sc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("pid")) {
        const auto& p = j.at("pid");
        if (p.contains("velocity")) sc.velocity_pid = pid_from_json(p.at("velocity"));
        if (p.contains("spacing")) sc.spacing_pid = pid_from_json(p.at("spacing"));
    }
    if (j.contains("passivation")) {
        const auto& p = j.at("passivation");
        sc.passivation.enabled = p.value("enabled", true);
        PassivationCase pcase;
        pcase.kind = passivation_kind_from_string(p.value("case", std::string("OSP")));
        if (p.contains("vsp_a")) pcase.a = p.at("vsp_a").get<double>();
        sc.passivation.pcase = pcase;
        sc.passivation.penalty_weight = p.value("penalty_weight", 10.0);
        if (p.contains("velocity")) {
            sc.passivation.velocity = controller_from_json(p.at("velocity"));
        }
        if (p.contains("spacing")) {
            sc.passivation.spacing = controller_from_json(p.at("spacing"));
        }
    }
    return sc;
}

Scenario Scenario::from_json_text(const std::string& text) {
    return from_json(nlohmann::json::parse(text));
}

nlohmann::json Scenario::to_json() const {
    json j{{"T_s", horizon_s},
           {"dt_s", dt_s},
           {"v_des_kmh", v_des_kmh},
           {"v_init_kmh", v_init_kmh},
           {"safe_distance_m", safe_distance_m},
           {"initial_gap_m", initial_gap_m},
           {"lead_profile", lead_profile_name(lead_profile)},
           {"delay_range_s", json::array({delay_range_s[0], delay_range_s[1]})},
           {"seed", seed}};
    if (velocity_pid || spacing_pid) {
        json p = json::object();
        if (velocity_pid) p["velocity"] = pid_to_json(*velocity_pid);
        if (spacing_pid) p["spacing"] = pid_to_json(*spacing_pid);
        j["pid"] = p;
    }
    json p{{"enabled", passivation.enabled},
           {"case", to_string(passivation.pcase.kind)},
           {"penalty_weight", passivation.penalty_weight}};
    if (passivation.pcase.a) p["vsp_a"] = *passivation.pcase.a;
    if (passivation.velocity) p["velocity"] = controller_to_json(*passivation.velocity);
    if (passivation.spacing) p["spacing"] = controller_to_json(*passivation.spacing);
    j["passivation"] = p;
    return j;
}

std::string Scenario::masked_canonical() const {
    json j = to_json();
    j.erase("passivation");
    return j.dump();
}

void Scenario::validate() const {
    if (!(horizon_s > 0.0)) throw std::invalid_argument("T_s must be positive");
    if (!(dt_s > 0.0)) throw std::invalid_argument("dt_s must be positive");
    if (!(v_init_kmh >= 0.0)) throw std::invalid_argument("v_init_kmh must be nonnegative");
    if (!(safe_distance_m > 0.0)) throw std::invalid_argument("safe_distance_m must be positive");
    if (!(initial_gap_m > 0.0)) throw std::invalid_argument("initial_gap_m must be positive");
    if (delay_range_s[0] < 0.0 || delay_range_s[1] < delay_range_s[0] ||
        delay_range_s[1] > horizon_s) {
        throw std::invalid_argument("delay range must satisfy 0 <= lo <= hi <= T");
    }
    if (passivation.pcase.kind == PassivationKind::Vsp) {
        if (!passivation.pcase.a || !(*passivation.pcase.a > 0.0) ||
            !(*passivation.pcase.a < 1.0)) {
            throw std::invalid_argument("VSP case requires vsp_a in (0,1)");
        }
    } else if (passivation.pcase.a) {
        throw std::invalid_argument("vsp_a is only meaningful for the VSP case");
    }
    if (passivation.enabled) {
        if (!passivation.velocity) {
            throw std::invalid_argument("passivation enabled but no velocity config given");
        }
        validate_controller(*passivation.velocity, "velocity");
        if (passivation.spacing) validate_controller(*passivation.spacing, "spacing");
    }
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

}  // namespace pacosim
