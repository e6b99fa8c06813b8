#include "pacosim/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pacosim/extremum_seeking.hpp"

namespace pacosim {

namespace {

using nlohmann::json;

constexpr double kGammaSafetyFactor = 1.05;
constexpr double kNoLeadGapM = 1e6;

/// mt19937_64 with the 53-bit mantissa mapping; draw order is part of the
/// reproducibility contract.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

private:
    std::mt19937_64 engine_;
};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json verdict_to_json(const ControllerVerdict& v) {
    return json{{"final_matrix",
                 {{"m11", v.final_matrix.m11},
                  {"m12", v.final_matrix.m12},
                  {"m21", v.final_matrix.m21},
                  {"m22", v.final_matrix.m22}}},
                {"gamma", v.gamma},
                {"case_passed", v.case_passed},
                {"epsilon", v.levels.epsilon},
                {"delta", v.levels.delta},
                {"dissipation_margin", v.margin},
                {"dissipation_margin_normalized", v.margin_normalized},
                {"nyquist_min_re", v.nyquist_min_re}};
}

ControllerVerdict verdict_from_json(const json& j) {
    ControllerVerdict v;
    const auto& m = j.at("final_matrix");
    v.final_matrix = PassivationMatrix(m.at("m11").get<double>(), m.at("m12").get<double>(),
                                       m.at("m21").get<double>(), m.at("m22").get<double>());
    v.gamma = j.at("gamma").get<double>();
    v.case_passed = j.at("case_passed").get<bool>();
    v.levels = {j.at("epsilon").get<double>(), j.at("delta").get<double>()};
    v.margin = j.at("dissipation_margin").get<double>();
    v.margin_normalized = j.at("dissipation_margin_normalized").get<double>();
    v.nyquist_min_re = j.at("nyquist_min_re").get<double>();
    return v;
}

json segments_to_json(const std::vector<SegmentStat>& segments) {
    json out = json::array();
    for (const auto& s : segments) {
        out.push_back(json{{"t_start", s.t_start},
                           {"t_end", s.t_end},
                           {"mean_abs_velocity_error", s.mean_abs_velocity_error}});
    }
    return out;
}

std::vector<SegmentStat> segments_from_json(const json& j) {
    std::vector<SegmentStat> out;
    for (const auto& s : j) {
        out.push_back({s.at("t_start").get<double>(), s.at("t_end").get<double>(),
                       s.at("mean_abs_velocity_error").get<double>()});
    }
    return out;
}

json trace_to_json(const SignalTrace& trace) {
    json rows = json::array();
    for (std::size_t k = 0; k < trace.size(); ++k) {
        json row = json::array();
        for (double v : trace.sample(k)) row.push_back(v);
        rows.push_back(row);
    }
    return json{{"t0", trace.t0()}, {"dt", trace.dt()}, {"dim", trace.dim()}, {"rows", rows}};
}

/// Tracks one controller (wrapped or raw) plus its optional ES loop.
struct ControllerLane {
    std::unique_ptr<DelayedPid> pid;
    std::unique_ptr<WrappedSystem> wrapped;  // null when passivation is off
    std::unique_ptr<EsLoop> es;
    double gamma = 0.0;  // measured inner gain with safety factor

    double command(double error, double t, double dt) {
        return wrapped ? wrapped->transform_step(error, dt) : pid->step_at(error, t, dt);
    }
};

ControllerLane make_lane(const PidGains& gains, double delay,
                         const std::optional<ControllerPassivation>& conf, bool enabled) {
    ControllerLane lane;
    lane.pid = std::make_unique<DelayedPid>(gains, delay);
    lane.gamma =
        kGammaSafetyFactor *
        l2_gain(lane.pid->rational_form(), FrequencyGrid::analysis_default()).value;
    if (enabled && conf) {
        lane.wrapped = std::make_unique<WrappedSystem>(*lane.pid, conf->initial_matrix());
        if (conf->es) {
            std::vector<EsChannel> channels;
            for (const auto& ch : conf->es->channels) {
                channels.push_back({ch.a, ch.omega, ch.theta0});
            }
            lane.es = std::make_unique<EsLoop>(channels, conf->es->k, conf->es->omega_h,
                                               conf->es->omega_l);
        }
    }
    return lane;
}

std::vector<double> profile_breakpoints(const Scenario& sc) {
    if (sc.lead_profile == LeadProfile::None) return {};
    const double T = sc.horizon_s;
    return {T / 3.0, T / 2.0, 2.0 * T / 3.0, 5.0 * T / 6.0};
}

std::vector<SegmentStat> segment_stats(const Scenario& sc, const std::vector<double>& v_h,
                                       double v_des_ms, double dt) {
    std::vector<double> edges{0.0};
    for (double b : profile_breakpoints(sc)) edges.push_back(b);
    edges.push_back(sc.horizon_s);

    std::vector<SegmentStat> out;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < v_h.size(); ++k) {
            const double t = static_cast<double>(k) * dt;
            if (t >= edges[s] - 1e-12 && t <= edges[s + 1] + 1e-12) {
                sum += std::abs(v_h[k] - v_des_ms);
                ++count;
            }
        }
        out.push_back({edges[s], edges[s + 1], count ? sum / static_cast<double>(count) : 0.0});
    }
    return out;
}

ControllerVerdict make_verdict(const ControllerLane& lane, const PassivationCase& pcase,
                               const SignalTrace& u0, const SignalTrace& y0, double horizon,
                               std::vector<std::string>& warnings) {
    ControllerVerdict v;
    v.final_matrix = lane.wrapped->matrix();
    v.gamma = lane.gamma;
    v.case_passed = check_case(v.final_matrix, v.gamma, pcase);
    v.levels = v.case_passed ? achieved_levels(v.final_matrix, pcase) : SupplyRateSpec{0.0, 0.0};
    v.margin = dissipation_margin(u0, y0, v.levels, u0.sample_times());
    v.margin_normalized = v.margin / std::max(l2_norm_sq(u0, horizon), 1e-12);
    try {
        const TransformedFrequencySystem sigma0(lane.pid->rational_form(), v.final_matrix);
        v.nyquist_min_re =
            ifp_index(sigma0.fn(), FrequencyGrid::analysis_default(), /*refine=*/false).value;
    } catch (const std::exception& e) {
        v.nyquist_min_re = std::numeric_limits<double>::quiet_NaN();
        warnings.push_back(std::string("transformed response singular on the grid: ") + e.what());
    }
    return v;
}

}  // namespace

double penalized_cost(double cost, const PassivationMatrix& m, double gamma,
                      const PassivationCase& pcase, double weight) {
    if (weight < 0.0) throw std::invalid_argument("penalty weight must be nonnegative");
    if (check_case(m, gamma, pcase)) return cost;
    return cost + weight * case_violation(m, gamma, pcase);
}

RunRecord run_experiment(const Scenario& sc) {
    sc.validate();

    RunRecord rec;
    rec.scenario_json = sc.to_json();
    rec.scenario_hash = fnv1a64(rec.scenario_json.dump());

    SeededRng rng(sc.seed);
    rec.delay_velocity_s = rng.uniform(sc.delay_range_s[0], sc.delay_range_s[1]);
    rec.delay_spacing_s = rng.uniform(sc.delay_range_s[0], sc.delay_range_s[1]);

    const bool has_lead = sc.lead_profile != LeadProfile::None;
    const LeadVariant variant =
        sc.lead_profile == LeadProfile::AsWritten ? LeadVariant::AsWritten
                                                  : LeadVariant::Continuous;

    ControllerLane vel = make_lane(sc.velocity_pid.value_or(default_velocity_pid_gains()),
                                   rec.delay_velocity_s, sc.passivation.velocity,
                                   sc.passivation.enabled);
    ControllerLane spc = make_lane(sc.spacing_pid.value_or(default_spacing_pid_gains()),
                                   rec.delay_spacing_s, sc.passivation.spacing,
                                   sc.passivation.enabled && has_lead);

    auto warn_once = [&](const std::string& message) {
        if (std::find(rec.warnings.begin(), rec.warnings.end(), message) == rec.warnings.end()) {
            rec.warnings.push_back(message);
        }
    };
    for (const ControllerLane* lane : {&vel, &spc}) {
        if (lane->wrapped && !lane->wrapped->contraction_ok()) {
            warn_once("one-step feedback loop may not contract: |m12/m11|*feedthrough >= 1");
        }
    }

    const double dt = sc.dt_s;
    const double v_des_ms = sc.v_des_kmh * kKmhToMs;
    const auto steps = static_cast<std::size_t>(std::llround(sc.horizon_s / dt));

    VehicleState host{0.0, sc.v_init_kmh * kKmhToMs, 0.0};
    double lead_x = sc.initial_gap_m;

    rec.t = SignalTrace(0.0, dt, 1);
    rec.vel_u0 = SignalTrace(0.0, dt, 1);
    rec.vel_y0 = SignalTrace(0.0, dt, 1);
    rec.spc_u0 = SignalTrace(0.0, dt, 1);
    rec.spc_y0 = SignalTrace(0.0, dt, 1);
    rec.vel_params = SignalTrace(0.0, dt, 4);
    rec.spc_params = SignalTrace(0.0, dt, 4);

    int prev_command = -1;
    int prev_mode = -1;

    for (std::size_t n = 0; n <= steps; ++n) {
        const double t = static_cast<double>(n) * dt;

        const double v_lead_ms =
            has_lead ? lead_velocity_kmh(std::min(t, sc.horizon_s), sc.horizon_s, variant) *
                           kKmhToMs
                     : 0.0;
        const double gap = has_lead ? lead_x - host.x : kNoLeadGapM;
        if (gap < 0.0) rec.collision = true;

        const double e_v = v_des_ms - host.v;
        const double e_s = gap - sc.safe_distance_m;

        const double vel_cmd = vel.command(e_v, t, dt);
        const double spc_cmd = has_lead ? spc.command(e_s, t, dt) : 0.0;

        AccMode selected{};
        if (has_lead) {
            selected = acc_supervisor(gap, sc.safe_distance_m, vel_cmd, spc_cmd);
        } else {
            selected.mode = ControlMode::Velocity;
            selected.magnitude = vel_cmd;
            selected.command = selected.magnitude >= 0.0 ? ActuatorCommand::Throttle
                                                         : ActuatorCommand::Brake;
        }

        // record the row at time t
        rec.t.push_back(t);
        rec.v_des_ms.push_back(v_des_ms);
        rec.v_h_ms.push_back(host.v);
        rec.v_lead_ms.push_back(v_lead_ms);
        rec.gap_m.push_back(gap);
        rec.a_cmd_ms2.push_back(selected.magnitude);
        const int mode_now = selected.mode == ControlMode::Spacing ? 1 : 0;
        const int command_now = selected.command == ActuatorCommand::Brake ? 1 : 0;
        rec.mode.push_back(mode_now);
        rec.command.push_back(command_now);
        if (prev_command == 0 && command_now == 1) ++rec.brake_events;
        if (prev_mode >= 0 && prev_mode != mode_now) ++rec.mode_switches;
        prev_command = command_now;
        prev_mode = mode_now;

        rec.vel_u0.push_back(e_v);
        rec.vel_y0.push_back(vel_cmd);
        rec.spc_u0.push_back(e_s);
        rec.spc_y0.push_back(spc_cmd);
        if (vel.wrapped) {
            const auto& m = vel.wrapped->matrix();
            rec.vel_params.push_back(std::array{m.m11, m.m12, m.m21, m.m22});
        }
        if (spc.wrapped) {
            const auto& m = spc.wrapped->matrix();
            rec.spc_params.push_back(std::array{m.m11, m.m12, m.m21, m.m22});
        }

        if (n == steps) break;

        host = vehicle_step(host, selected.magnitude, dt);
        if (has_lead) lead_x += v_lead_ms * dt;

        // online tuning on the instantaneous tracking error, with the
        // passivity constraint as a hinge penalty
        if (vel.es) {
            const double j_raw = std::abs(v_des_ms - host.v);
            const double j = penalized_cost(j_raw, vel.wrapped->matrix(), vel.gamma,
                                            sc.passivation.pcase,
                                            sc.passivation.penalty_weight);
            const std::vector<double> theta = vel.es->step(j, dt);
            try {
                vel.wrapped->set_matrix(
                    PassivationMatrix(theta[0], theta[1], theta[2], theta[3]));
            } catch (const std::exception&) {
                warn_once("velocity ES probe produced an unusable matrix; parameters held");
            }
        }
        if (spc.es && has_lead) {
            const double gap_now = lead_x - host.x;
            const double j_raw = std::abs(gap_now - sc.safe_distance_m);
            const double j = penalized_cost(j_raw, spc.wrapped->matrix(), spc.gamma,
                                            sc.passivation.pcase,
                                            sc.passivation.penalty_weight);
            const std::vector<double> theta = spc.es->step(j, dt);
            try {
                spc.wrapped->set_matrix(
                    PassivationMatrix(theta[0], theta[1], theta[2], theta[3]));
            } catch (const std::exception&) {
                warn_once("spacing ES probe produced an unusable matrix; parameters held");
            }
        }
    }

    // costs over the full horizon
    const SignalTrace v_h_trace = SignalTrace::scalar(0.0, dt, rec.v_h_ms);
    const SignalTrace v_des_trace = SignalTrace::scalar(0.0, dt, rec.v_des_ms);
    rec.j_velocity = tracking_cost(v_h_trace, v_des_trace, sc.horizon_s);
    if (has_lead) {
        SignalTrace gap_trace = SignalTrace::scalar(0.0, dt, rec.gap_m);
        SignalTrace safe_trace(0.0, dt, 1);
        for (std::size_t k = 0; k < rec.gap_m.size(); ++k) {
            safe_trace.push_back(sc.safe_distance_m);
        }
        rec.j_spacing = spacing_cost(gap_trace, safe_trace, sc.horizon_s);
    }
    rec.segments = segment_stats(sc, rec.v_h_ms, v_des_ms, dt);

    if (vel.wrapped) {
        rec.velocity_verdict = make_verdict(vel, sc.passivation.pcase, rec.vel_u0, rec.vel_y0,
                                            sc.horizon_s, rec.warnings);
    }
    if (spc.wrapped) {
        rec.spacing_verdict = make_verdict(spc, sc.passivation.pcase, rec.spc_u0, rec.spc_y0,
                                           sc.horizon_s, rec.warnings);
    }
    return rec;
}

nlohmann::json RunRecord::summary_json() const {
    json j{{"scenario", scenario_json},
           {"scenario_hash", scenario_hash},
           {"delay_velocity_s", delay_velocity_s},
           {"delay_spacing_s", delay_spacing_s},
           {"collision", collision},
           {"warnings", warnings},
           {"j_velocity", j_velocity},
           {"j_spacing", j_spacing},
           {"brake_events", brake_events},
           {"mode_switches", mode_switches},
           {"segments", segments_to_json(segments)}};
    if (velocity_verdict) j["velocity_verdict"] = verdict_to_json(*velocity_verdict);
    if (spacing_verdict) j["spacing_verdict"] = verdict_to_json(*spacing_verdict);
    return j;
}

nlohmann::json RunRecord::full_json() const {
    json j = summary_json();
    j["traces"] = json{{"t0", t.t0()},
                       {"dt", t.dt()},
                       {"v_des_ms", v_des_ms},
                       {"v_h_ms", v_h_ms},
                       {"v_lead_ms", v_lead_ms},
                       {"gap_m", gap_m},
                       {"a_cmd_ms2", a_cmd_ms2},
                       {"mode", mode},
                       {"command", command},
                       {"vel_u0", trace_to_json(vel_u0)},
                       {"vel_y0", trace_to_json(vel_y0)},
                       {"spc_u0", trace_to_json(spc_u0)},
                       {"spc_y0", trace_to_json(spc_y0)},
                       {"vel_params", trace_to_json(vel_params)},
                       {"spc_params", trace_to_json(spc_params)}};
    return j;
}

CompareReport compare_runs(const RunRecord& a, const RunRecord& b) {
    json ja = a.scenario_json;
    json jb = b.scenario_json;
    ja.erase("passivation");
    jb.erase("passivation");
    if (ja.dump() != jb.dump()) {
        throw std::invalid_argument(
            "records are not comparable: scenarios differ beyond the passivation setup");
    }
    CompareReport rep;
    rep.j_velocity_a = a.j_velocity;
    rep.j_velocity_b = b.j_velocity;
    rep.delta_j_velocity = b.j_velocity - a.j_velocity;
    rep.brake_events_a = a.brake_events;
    rep.brake_events_b = b.brake_events;
    rep.mode_switches_a = a.mode_switches;
    rep.mode_switches_b = b.mode_switches;
    rep.segments_a = a.segments;
    rep.segments_b = b.segments;
    return rep;
}

nlohmann::json CompareReport::to_json() const {
    return json{{"j_velocity_a", j_velocity_a},
                {"j_velocity_b", j_velocity_b},
                {"delta_j_velocity", delta_j_velocity},
                {"brake_events_a", brake_events_a},
                {"brake_events_b", brake_events_b},
                {"mode_switches_a", mode_switches_a},
                {"mode_switches_b", mode_switches_b},
                {"segments_a", segments_to_json(segments_a)},
                {"segments_b", segments_to_json(segments_b)}};
}

void write_run_traces_csv(const RunRecord& record, std::ostream& os) {
    os << "t,v_des,v_h,v_lead,gap,mode,command,a_cmd\n";
    for (std::size_t k = 0; k < record.t.size(); ++k) {
        os << format_double(record.t.time(k)) << ',' << format_double(record.v_des_ms[k]) << ','
           << format_double(record.v_h_ms[k]) << ',' << format_double(record.v_lead_ms[k]) << ','
           << format_double(record.gap_m[k]) << ','
           << (record.mode[k] ? "spacing" : "velocity") << ','
           << (record.command[k] ? "brake" : "throttle") << ','
           << format_double(record.a_cmd_ms2[k]) << '\n';
    }
}

RunTraces read_run_traces_csv(std::istream& is) {
    RunTraces out;
    std::string line;
    if (!std::getline(is, line) || line != "t,v_des,v_h,v_lead,gap,mode,command,a_cmd") {
        throw std::invalid_argument("bad run trace header");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw std::invalid_argument("bad run trace row");
        out.t.push_back(std::stod(cells[0]));
        out.v_des.push_back(std::stod(cells[1]));
        out.v_h.push_back(std::stod(cells[2]));
        out.v_lead.push_back(std::stod(cells[3]));
        out.gap.push_back(std::stod(cells[4]));
        out.mode.push_back(cells[5] == "spacing" ? 1 : 0);
        out.command.push_back(cells[6] == "brake" ? 1 : 0);
        out.a_cmd.push_back(std::stod(cells[7]));
    }
    return out;
}

void write_params_csv(const SignalTrace& params, std::ostream& os) {
    if (params.dim() != 4) throw std::invalid_argument("parameter trace must have dimension 4");
    os << "t,m11,m12,m21,m22\n";
    for (std::size_t k = 0; k < params.size(); ++k) {
        os << format_double(params.time(k));
        for (double v : params.sample(k)) os << ',' << format_double(v);
        os << '\n';
    }
}

void export_run(const RunRecord& record, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    auto open = [&](const std::string& name) {
        std::ofstream os(fs::path(dir) / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + name + " under " + dir);
        return os;
    };

    {
        auto os = open("record.json");
        os << record.summary_json().dump(2) << '\n';
    }
    {
        auto os = open("traces.csv");
        write_run_traces_csv(record, os);
    }
    if (record.vel_params.size() > 0) {
        auto os = open("velocity_params.csv");
        write_params_csv(record.vel_params, os);
    }
    if (record.spc_params.size() > 0) {
        auto os = open("spacing_params.csv");
        write_params_csv(record.spc_params, os);
    }
}

RunRecord load_run_record(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open record: " + path);
    json j = json::parse(is);

    RunRecord rec;
    rec.scenario_json = j.at("scenario");
    rec.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
    rec.delay_velocity_s = j.at("delay_velocity_s").get<double>();
    rec.delay_spacing_s = j.at("delay_spacing_s").get<double>();
    rec.collision = j.at("collision").get<bool>();
    rec.warnings = j.at("warnings").get<std::vector<std::string>>();
    rec.j_velocity = j.at("j_velocity").get<double>();
    rec.j_spacing = j.at("j_spacing").get<double>();
    rec.brake_events = j.at("brake_events").get<int>();
    rec.mode_switches = j.at("mode_switches").get<int>();
    rec.segments = segments_from_json(j.at("segments"));
    if (j.contains("velocity_verdict")) {
        rec.velocity_verdict = verdict_from_json(j.at("velocity_verdict"));
    }
    if (j.contains("spacing_verdict")) {
        rec.spacing_verdict = verdict_from_json(j.at("spacing_verdict"));
    }
    return rec;
}

}  // namespace pacosim
