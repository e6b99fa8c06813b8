#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pacosim/experiment.hpp"
#include "pacosim/extremum_seeking.hpp"
#include "pacosim/lti_analysis.hpp"
#include "pacosim/passivation.hpp"
#include "pacosim/plant.hpp"
#include "pacosim/scenario.hpp"

namespace {

using nlohmann::json;
using namespace pacosim;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitValidationFailure = 3;
constexpr int kExitIoError = 4;

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return json::parse(is);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << text;
}

Scenario load_scenario(const std::string& path) {
    Scenario sc = Scenario::from_json(load_json_file(path));
    sc.validate();
    return sc;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
    Scenario sc;
    try {
        sc = load_scenario(scenario_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    RunRecord rec = run_experiment(sc);
    try {
        export_run(rec, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIoError;
    }
    std::cout << "run complete: J_velocity=" << rec.j_velocity
              << " m, brake_events=" << rec.brake_events
              << ", outputs in " << out_dir << "\n";
    for (const auto& w : rec.warnings) std::cout << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
    Scenario sc;
    try {
        sc = Scenario::from_json(load_json_file(scenario_path));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        sc.validate();
    } catch (const std::exception& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return kExitValidationFailure;
    }

    bool ok = true;
    auto check_lane = [&](const char* label, const std::optional<ControllerPassivation>& conf,
                          const PidGains& gains) {
        if (!conf) return;
        const DelayedPid pid(gains, 0.5 * (sc.delay_range_s[0] + sc.delay_range_s[1]));
        const double gamma =
            1.05 * l2_gain(pid.rational_form(), FrequencyGrid::analysis_default()).value;
        const PassivationMatrix m = conf->initial_matrix();
        const bool passed = check_case(m, gamma, sc.passivation.pcase);
        std::cout << label << ": gamma=" << gamma << " case "
                  << to_string(sc.passivation.pcase.kind)
                  << (passed ? " holds" : " violated") << " at the initial matrix\n";
        if (!passed) ok = false;
    };
    if (sc.passivation.enabled) {
        check_lane("velocity", sc.passivation.velocity,
                   sc.velocity_pid.value_or(default_velocity_pid_gains()));
        check_lane("spacing", sc.passivation.spacing,
                   sc.spacing_pid.value_or(default_spacing_pid_gains()));
    }
    if (!ok) {
        std::cerr << "validation failure: initial matrices violate the selected case\n";
        return kExitValidationFailure;
    }
    std::cout << "scenario valid\n";
    return kExitOk;
}

int cmd_analyze(const std::string& system_path, const std::string& nyquist_path, bool inverse,
                const std::string& out_path) {
    json spec;
    RationalDelaySystem sys({1.0}, {1.0});
    std::optional<PassivationMatrix> matrix;
    FrequencyGrid grid = FrequencyGrid::analysis_default();
    try {
        spec = load_json_file(system_path);
        sys = RationalDelaySystem(spec.at("num").get<std::vector<double>>(),
                                  spec.at("den").get<std::vector<double>>(),
                                  spec.value("tau_s", 0.0));
        if (spec.contains("matrix")) {
            const auto& m = spec.at("matrix");
            matrix = PassivationMatrix(m.at("m11").get<double>(), m.at("m12").get<double>(),
                                       m.at("m21").get<double>(), m.at("m22").get<double>());
        }
        if (spec.contains("grid")) {
            const auto& g = spec.at("grid");
            grid = FrequencyGrid::logspace(g.at("omega_min").get<double>(),
                                           g.at("omega_max").get<double>(),
                                           g.at("points").get<std::size_t>());
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    const IndexResult nu = ifp_index(sys, grid);
    const IndexResult rho = ofp_index(sys, grid);
    const IndexResult gamma = l2_gain(sys, grid);
    json report{{"nu", nu.value},
                {"rho", rho.value},
                {"gamma", gamma.value},
                {"argmin_omega", nu.omega},
                {"rho_argmin_omega", rho.omega},
                {"gamma_argmax_omega", gamma.omega},
                {"grid_spec",
                 {{"omega_min", grid.omegas.front()},
                  {"omega_max", grid.omegas.back()},
                  {"points", grid.omegas.size()}}}};
    if (matrix) {
        const TransformedFrequencySystem sigma0(sys, *matrix);
        const IndexResult min_re = ifp_index(sigma0.fn(), grid, /*refine=*/false);
        report["transformed"] = json{{"min_re", min_re.value}, {"argmin_omega", min_re.omega}};
    }

    try {
        if (!nyquist_path.empty()) {
            std::ofstream os(nyquist_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + nyquist_path);
            if (matrix) {
                const TransformedFrequencySystem sigma0(sys, *matrix);
                write_nyquist_csv(os, nyquist_points(sigma0.fn(), grid, inverse));
            } else {
                write_nyquist_csv(os, nyquist_points(sys, grid, inverse));
            }
        }
        if (!out_path.empty()) {
            write_text_file(out_path, report.dump(2) + "\n");
        } else {
            std::cout << report.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIoError;
    }
    return kExitOk;
}

int cmd_compare(const std::string& record_a, const std::string& record_b,
                const std::string& out_path) {
    RunRecord a, b;
    try {
        a = load_run_record(record_a);
        b = load_run_record(record_b);
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIoError;
    }
    CompareReport rep;
    try {
        rep = compare_runs(a, b);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    const std::string text = rep.to_json().dump(2) + "\n";
    if (!out_path.empty()) {
        try {
            write_text_file(out_path, text);
        } catch (const std::exception& e) {
            std::cerr << "i/o error: " << e.what() << "\n";
            return kExitIoError;
        }
    } else {
        std::cout << text;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"passivation co-simulation toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out";
    auto* run = app.add_subcommand("run", "run a scenario and export its record");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check dithers and matrices only");
    validate->add_option("scenario", validate_path, "scenario JSON file")->required();

    std::string system_path, nyquist_path, report_path;
    bool inverse = false;
    auto* analyze = app.add_subcommand("analyze", "passivity indices and Nyquist data");
    analyze->add_option("system", system_path, "system JSON file")->required();
    analyze->add_option("--nyquist", nyquist_path, "write Nyquist CSV here");
    analyze->add_flag("--inverse", inverse, "export the inverse Nyquist locus");
    analyze->add_option("--out", report_path, "write the index report here");

    std::string record_a, record_b, compare_out;
    auto* compare = app.add_subcommand("compare", "compare two run records");
    compare->add_option("a", record_a, "first record.json")->required();
    compare->add_option("b", record_b, "second record.json")->required();
    compare->add_option("--out", compare_out, "write the comparison report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_path, out_dir);
        if (validate->parsed()) return cmd_validate(validate_path);
        if (analyze->parsed()) return cmd_analyze(system_path, nyquist_path, inverse, report_path);
        if (compare->parsed()) return cmd_compare(record_a, record_b, compare_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}
