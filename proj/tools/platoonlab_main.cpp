// Command-line front end: scenario simulation, verification against built-in
// thresholds, parameter sweeps, and preset inspection.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid input,
// 3 integration failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "platoonlab/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitIntegrationFailed = 3;

struct CommonFlags {
    std::string out_dir = "out";
    double stride = -1.0;
    double t_end = -1.0;
    std::string method;
    double rtol = -1.0;
    double atol = -1.0;
    bool quiet = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--out-dir", flags.out_dir, "Directory for emitted files")
        ->capture_default_str();
    cmd->add_option("--stride", flags.stride, "Override the sample stride [s]");
    cmd->add_option("--t-end", flags.t_end, "Override the simulation horizon [s]");
    cmd->add_option("--method", flags.method, "Integration method: rk45 or rk4")
        ->check(CLI::IsMember({"rk45", "rk4"}));
    cmd->add_option("--rtol", flags.rtol, "Override the relative tolerance");
    cmd->add_option("--atol", flags.atol, "Override the absolute tolerance");
    cmd->add_flag("--quiet", flags.quiet, "Suppress informational output");
}

platoonlab::Scenario load_scenario(const std::string& source, const CommonFlags& flags) {
    platoonlab::Scenario sc;
    if (std::filesystem::exists(source)) {
        std::ifstream in(source);
        if (!in) throw std::invalid_argument("cannot open scenario file '" + source + "'");
        std::ostringstream text;
        text << in.rdbuf();
        sc = platoonlab::scenario_from_string(text.str());
    } else {
        sc = platoonlab::preset(source);
    }
    if (flags.stride > 0.0) sc.integrator.sample_stride = flags.stride;
    if (flags.t_end > 0.0) sc.integrator.t_end = flags.t_end;
    if (!flags.method.empty())
        sc.integrator.method = (flags.method == "rk4") ? platoonlab::Method::RK4Fixed
                                                       : platoonlab::Method::RK45Adaptive;
    if (flags.rtol > 0.0) sc.integrator.rtol = flags.rtol;
    if (flags.atol > 0.0) sc.integrator.atol = flags.atol;
    sc.validate();
    return sc;
}

void print_monitors(const platoonlab::MonitorReport& monitors) {
    for (const auto& m : monitors.monitors) {
        if (!m.applicable) {
            std::printf("  [ -- ] %-26s (not applicable)\n", m.name.c_str());
            continue;
        }
        std::printf("  [%s] %-26s worst margin %.6g", m.passed ? "PASS" : "FAIL", m.name.c_str(),
                    m.worst_margin);
        if (!m.passed) std::printf("  first violation at t=%.6g", m.first_violation_t);
        std::printf("\n");
    }
}

void print_checks(const std::vector<platoonlab::VerifyCheck>& checks) {
    for (const auto& c : checks)
        std::printf("  [%s] %-34s measured %.10g  required %s %.10g\n",
                    c.passed ? "PASS" : "FAIL", c.label.c_str(), c.measured, c.relation.c_str(),
                    c.bound);
}

int run_simulate_or_verify(const std::string& source, const CommonFlags& flags, bool verify) {
    platoonlab::Scenario sc = load_scenario(source, flags);
    platoonlab::RunReport rep = platoonlab::run_scenario(sc, flags.out_dir, true, verify);

    if (!flags.quiet) {
        std::printf("scenario %s (hash %s)\n", rep.scenario_name.c_str(),
                    rep.scenario_hash.c_str());
        std::printf("termination %s at t=%.6g\n", platoonlab::termination_name(rep.termination),
                    rep.t_reached);
        std::printf("dist to equilibrium %.6g, max|F| %.6g\n", rep.dist_to_equilibrium_end,
                    rep.max_abs_accel);
        if (rep.fit_log_H)
            std::printf("log H tail slope %.6g (R^2 %.6g, %d points)\n", rep.fit_log_H->slope,
                        rep.fit_log_H->r_squared, rep.fit_log_H->points);
        if (rep.fit_log_U)
            std::printf("log U tail slope %.6g (R^2 %.6g, %d points)\n", rep.fit_log_U->slope,
                        rep.fit_log_U->r_squared, rep.fit_log_U->points);
        std::printf("monitors:\n");
        print_monitors(rep.monitors);
        if (verify && !rep.checks.empty()) {
            std::printf("checks:\n");
            print_checks(rep.checks);
        }
        if (!rep.emitted_files.empty())
            std::printf("emitted %zu files under %s\n", rep.emitted_files.size(),
                        (std::filesystem::path(flags.out_dir) / sc.name).string().c_str());
    }

    if (rep.termination != platoonlab::Termination::Completed) {
        std::fprintf(stderr, "integration failed: %s at t=%.6g\n",
                     platoonlab::termination_name(rep.termination), rep.t_reached);
        return kExitIntegrationFailed;
    }
    if (verify) {
        const bool ok = rep.verify_passed();
        if (!flags.quiet) std::printf("verification %s\n", ok ? "PASSED" : "FAILED");
        return ok ? kExitOk : kExitVerifyFailed;
    }
    return kExitOk;
}

int run_sweep(const std::string& source, const std::string& axis,
              const std::vector<double>& values, const CommonFlags& flags) {
    platoonlab::Scenario base = load_scenario(source, flags);
    platoonlab::SweepResult result =
        platoonlab::sweep_scenario(base, axis, values, flags.out_dir, true);
    if (!flags.quiet) {
        std::printf("%-10s %-12s %-14s %-12s %-12s %-10s %-8s %s\n", "axis", "value", "conv_time",
                    "slope", "max|F|", "mu_n", "monitors", "error");
        for (const auto& row : result.rows)
            std::printf("%-10s %-12.6g %-14.6g %-12.6g %-12.6g %-10.6g %-8s %s\n",
                        result.axis.c_str(), row.value, row.convergence_time, row.decay_slope,
                        row.max_abs_accel, row.mu_n_value, row.monitors_passed ? "pass" : "fail",
                        row.error.c_str());
        for (const auto& f : result.emitted_files) std::printf("wrote %s\n", f.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear bidirectional cruise-control simulation lab"};
    app.require_subcommand(1);

    CommonFlags sim_flags, ver_flags, sweep_flags;
    std::string sim_source, ver_source, sweep_source;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    bool list_presets = false;
    std::string preset_name;

    CLI::App* sim = app.add_subcommand("simulate", "Integrate a scenario and emit its files");
    sim->add_option("scenario", sim_source, "Scenario file or preset name")->required();
    add_common_flags(sim, sim_flags);

    CLI::App* ver = app.add_subcommand("verify", "Simulate, then assert acceptance thresholds");
    ver->add_option("scenario", ver_source, "Scenario file or preset name")->required();
    add_common_flags(ver, ver_flags);

    CLI::App* swp = app.add_subcommand("sweep", "Run a scenario across an axis of values");
    swp->add_option("scenario", sweep_source, "Scenario file or preset name")->required();
    swp->add_option("--axis", sweep_axis, "Swept parameter: mu, lambda, q, n, R, d")->required();
    swp->add_option("--values", sweep_values, "Comma-separated axis values")
        ->required()
        ->delimiter(',');
    add_common_flags(swp, sweep_flags);

    CLI::App* pre = app.add_subcommand("preset", "Inspect built-in presets");
    pre->add_flag("--list", list_presets, "List preset names");
    pre->add_option("name", preset_name, "Print the scenario for this preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (sim->parsed()) return run_simulate_or_verify(sim_source, sim_flags, false);
        if (ver->parsed()) return run_simulate_or_verify(ver_source, ver_flags, true);
        if (swp->parsed()) return run_sweep(sweep_source, sweep_axis, sweep_values, sweep_flags);
        if (pre->parsed()) {
            if (list_presets) {
                for (const auto& name : platoonlab::preset_names()) std::printf("%s\n", name.c_str());
                return kExitOk;
            }
            if (!preset_name.empty()) {
                std::printf("%s", platoonlab::scenario_to_string(platoonlab::preset(preset_name)).c_str());
                return kExitOk;
            }
            std::fprintf(stderr, "preset: pass --list or a preset name\n");
            return kExitInvalidInput;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidInput;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalidInput;
    }
    return kExitInvalidInput;
}
