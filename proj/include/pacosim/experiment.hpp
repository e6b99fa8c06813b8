#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pacosim/scenario.hpp"

namespace pacosim {

/// Post-run passivity evidence for one wrapped controller.
struct ControllerVerdict {
    PassivationMatrix final_matrix{1.0, 0.0, 0.0, 1.0};
    double gamma = 0.0;  // measured inner L2 gain with safety factor applied
    bool case_passed = false;
    SupplyRateSpec levels;           // achieved levels when the case passed, else (0,0)
    double margin = 0.0;             // dissipation margin of the recorded (u0, y0)
    double margin_normalized = 0.0;  // margin / input energy
    double nyquist_min_re = 0.0;     // min Re of the transformed response over the grid
};

struct SegmentStat {
    double t_start;
    double t_end;
    double mean_abs_velocity_error;  // m/s
};

/// Everything one run produces. Byte-identical for identical (scenario, seed).
struct RunRecord {
    nlohmann::json scenario_json;
    std::uint64_t scenario_hash = 0;

    double delay_velocity_s = 0.0;
    double delay_spacing_s = 0.0;
    bool collision = false;
    std::vector<std::string> warnings;

    double j_velocity = 0.0;  // integral of |v_h - v_des|, m
    double j_spacing = 0.0;   // integral of |x_h - x_des|, m*s; zero without a lead
    int brake_events = 0;     // throttle -> brake transitions
    int mode_switches = 0;
    std::vector<SegmentStat> segments;

    std::optional<ControllerVerdict> velocity_verdict;
    std::optional<ControllerVerdict> spacing_verdict;

    // Traces, one sample per step plus the initial state (T/dt + 1 rows).
    SignalTrace t{0.0, 1.0, 1};  // placeholder grid, rebuilt by the runner
    std::vector<double> v_des_ms, v_h_ms, v_lead_ms, gap_m, a_cmd_ms2;
    std::vector<int> mode, command;  // ControlMode / ActuatorCommand per row
    SignalTrace vel_u0{0.0, 1.0, 1}, vel_y0{0.0, 1.0, 1};
    SignalTrace spc_u0{0.0, 1.0, 1}, spc_y0{0.0, 1.0, 1};
    SignalTrace vel_params{0.0, 1.0, 4}, spc_params{0.0, 1.0, 4};

    nlohmann::json summary_json() const;
    nlohmann::json full_json() const;  // summary plus all traces
};

RunRecord run_experiment(const Scenario& scenario);

/// Cost with the passivity constraint enforced as a hinge penalty: equals
/// `cost` whenever check_case passes.
double penalized_cost(double cost, const PassivationMatrix& m, double gamma,
                      const PassivationCase& pcase, double weight);

struct CompareReport {
    double j_velocity_a = 0.0, j_velocity_b = 0.0;
    double delta_j_velocity = 0.0;  // b - a
    int brake_events_a = 0, brake_events_b = 0;
    int mode_switches_a = 0, mode_switches_b = 0;
    std::vector<SegmentStat> segments_a, segments_b;

    nlohmann::json to_json() const;
};

/// Requires both records to share the scenario up to the passivation subtree.
CompareReport compare_runs(const RunRecord& a, const RunRecord& b);

/// CSV `t,v_des,v_h,v_lead,gap,mode,command,a_cmd`, one row per step.
void write_run_traces_csv(const RunRecord& record, std::ostream& os);

struct RunTraces {
    std::vector<double> t, v_des, v_h, v_lead, gap, a_cmd;
    std::vector<int> mode, command;
};
RunTraces read_run_traces_csv(std::istream& is);

/// CSV `t,m11,m12,m21,m22` from a dim-4 parameter trace.
void write_params_csv(const SignalTrace& params, std::ostream& os);

/// Writes record.json plus trace/parameter CSVs under `dir`.
void export_run(const RunRecord& record, const std::string& dir);

RunRecord load_run_record(const std::string& path);

}  // namespace pacosim
