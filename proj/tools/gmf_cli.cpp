#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmf/harness.hpp"

namespace {

using namespace gmf;
using namespace gmf::harness;

struct CommonArgs {
    std::string updater = "ekf";
    std::string scheme = "traditional";
    std::string config_path;
    std::string output;
    std::string trial_csv;
    std::string grid_prefix;
    ScenarioConfig cfg;
};

void add_common(CLI::App* app, CommonArgs& args) {
    app->add_option("--seed", args.cfg.seed, "RNG seed (required for reproducibility)")
        ->required();
    app->add_option("--config", args.config_path, "JSON config file overriding defaults");
    app->add_option("--components,-M", args.cfg.components, "GMM component count");
    app->add_option("--monte-carlo,--mc", args.cfg.monte_carlo, "Monte Carlo trial count");
    app->add_option("--updater", args.updater, "ekf | bruf | ukf | ckf");
    app->add_option("--scheme", args.scheme,
                    "traditional | improved | traditional-sigma | improved-sigma");
    app->add_option("--bruf-n", args.cfg.updater.bruf_steps, "BRUF inner step count");
    app->add_option("--ut-alpha", args.cfg.updater.ut.alpha, "UT alpha");
    app->add_option("--ut-beta", args.cfg.updater.ut.beta, "UT beta");
    app->add_option("--ut-kappa", args.cfg.updater.ut.kappa, "UT kappa");
    app->add_option("--rel-tol", args.cfg.integrator.rel_tol, "integrator relative tolerance");
    app->add_option("--abs-tol", args.cfg.integrator.abs_tol, "integrator absolute tolerance");
    app->add_option("--threads", args.cfg.threads, "worker threads (0 = hardware)");
    app->add_option("--max-flagged-fraction", args.cfg.max_flagged_fraction,
                    "exit 2 when flagged trials exceed this fraction");
    app->add_option("--output,-o", args.output, "report JSON path");
    app->add_option("--trial-csv", args.trial_csv, "per-trial CSV path");
    app->add_option("--grid-dump", args.grid_prefix, "grid dump path prefix (2D scenarios)");
}

void finalize(CommonArgs& args) {
    if (!args.config_path.empty()) load_config_file(args.cfg, args.config_path);
    args.cfg.updater.kind = parse_updater(args.updater);
    args.cfg.scheme = parse_scheme(args.scheme);
    args.cfg.output_path = args.output;
    args.cfg.trial_csv_path = args.trial_csv;
    args.cfg.grid_dump_prefix = args.grid_prefix;
}

int emit(const RunReport& report, const ScenarioConfig& cfg) {
    for (const auto& r : report.records) {
        std::printf("%-32s components=%-4d trials=%-4d rmse=%.6g", r.label.c_str(), r.components,
                    r.trials, r.rmse);
        if (r.kld) std::printf(" kld=%.6g", *r.kld);
        if (report.scenario == "nrho")
            std::printf(" rmse_pos=%.6g snees=%.6g", r.rmse_position, r.snees);
        if (r.flagged_trials || r.failed_trials)
            std::printf(" flagged=%d failed=%d", r.flagged_trials, r.failed_trials);
        std::printf("\n");
    }
    if (!cfg.output_path.empty()) write_report(report, cfg.output_path);
    if (!cfg.trial_csv_path.empty()) write_trial_csv(report, cfg.trial_csv_path);
    return report.worst_flagged_fraction() > cfg.max_flagged_fraction ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian mixture filtering experiments"};
    app.require_subcommand(1);

    CommonArgs avocado_args, nrho_args, linear_args, sweep_args;
    avocado_args.cfg.scenario = Scenario::Avocado;
    nrho_args.cfg.scenario = Scenario::Nrho;
    nrho_args.cfg.components = 35;
    nrho_args.cfg.monte_carlo = 20;
    linear_args.cfg.scenario = Scenario::LinearCheck;

    auto* avocado_cmd = app.add_subcommand("avocado", "single-update 2D experiment");
    add_common(avocado_cmd, avocado_args);
    bool simulate = false;
    avocado_cmd->add_flag("--simulate-measurements", simulate,
                          "redraw truth and simulate noisy measurements per trial");

    auto* nrho_cmd = app.add_subcommand("nrho", "cislunar tracking experiment");
    add_common(nrho_cmd, nrho_args);
    nrho_cmd->add_option("--orbits", nrho_args.cfg.nrho.orbits, "number of orbits");
    nrho_cmd->add_option("--divergence-gate", nrho_args.cfg.nrho.divergence_gate_lu,
                         "position RMSE flag threshold [LU]");
    nrho_cmd->add_option("--bandwidth-scale", nrho_args.cfg.nrho.bandwidth_scale,
                         "kernel bandwidth scale factor");
    nrho_cmd->add_flag("--shrink-kernel-means", nrho_args.cfg.nrho.shrink_kernel_means,
                       "variance-preserving kernel placement");
    nrho_cmd->add_option("--inflation", nrho_args.cfg.nrho.post_resample_inflation,
                         "post-resample spread inflation");

    auto* linear_cmd = app.add_subcommand("linear-check", "linear-model weight equivalence fuzz");
    add_common(linear_cmd, linear_args);
    linear_cmd->add_option("--cases", linear_args.cfg.linear_check.cases, "fuzz case count");

    auto* sweep_cmd = app.add_subcommand("sweep", "component-count sweep (avocado)");
    add_common(sweep_cmd, sweep_args);
    std::vector<int> sweep_counts{10, 25, 50, 100, 200};
    std::vector<std::string> sweep_updaters{"ekf"};
    sweep_cmd->add_option("--counts", sweep_counts, "component counts");
    sweep_cmd->add_option("--updaters", sweep_updaters, "updaters to sweep");

    CLI11_PARSE(app, argc, argv);

    try {
        if (avocado_cmd->parsed()) {
            finalize(avocado_args);
            avocado_args.cfg.avocado.simulate_measurements |= simulate;
            RunReport report = run_avocado(avocado_args.cfg);
            return emit(report, avocado_args.cfg);
        }
        if (nrho_cmd->parsed()) {
            finalize(nrho_args);
            RunReport report = run_nrho(nrho_args.cfg);
            return emit(report, nrho_args.cfg);
        }
        if (linear_cmd->parsed()) {
            finalize(linear_args);
            RunReport report = run_linear_check(linear_args.cfg);
            std::printf("linear-check: %d cases, max weight discrepancy %.3e\n",
                        report.records.front().trials, report.records.front().rmse);
            if (!linear_args.cfg.output_path.empty())
                write_report(report, linear_args.cfg.output_path);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            finalize(sweep_args);
            std::vector<UpdaterSpec> updaters;
            for (const auto& u : sweep_updaters) {
                UpdaterSpec spec = sweep_args.cfg.updater;
                spec.kind = parse_updater(u);
                updaters.push_back(spec);
            }
            RunReport report = run_sweep(sweep_args.cfg, sweep_counts, updaters);
            return emit(report, sweep_args.cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
