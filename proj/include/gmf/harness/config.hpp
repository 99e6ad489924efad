#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmf/metrics.hpp"
#include "gmf/propagation.hpp"
#include "gmf/updaters.hpp"
#include "gmf/weights.hpp"

namespace gmf::harness {

enum class Scenario { Avocado, Nrho, LinearCheck };

inline UpdaterSpec::Kind parse_updater(const std::string& s) {
    if (s == "ekf") return UpdaterSpec::Kind::Ekf;
    if (s == "bruf") return UpdaterSpec::Kind::Bruf;
    if (s == "ukf") return UpdaterSpec::Kind::Ukf;
    if (s == "ckf") return UpdaterSpec::Kind::Ckf;
    throw std::invalid_argument("unknown updater: " + s);
}

inline std::string updater_name(UpdaterSpec::Kind k) {
    switch (k) {
        case UpdaterSpec::Kind::Ekf: return "ekf";
        case UpdaterSpec::Kind::Bruf: return "bruf";
        case UpdaterSpec::Kind::Ukf: return "ukf";
        case UpdaterSpec::Kind::Ckf: return "ckf";
    }
    return "?";
}

inline WeightScheme parse_scheme(const std::string& s) {
    if (s == "traditional") return WeightScheme::TraditionalDensity;
    if (s == "improved") return WeightScheme::ImprovedDensity;
    if (s == "traditional-sigma") return WeightScheme::TraditionalSigma;
    if (s == "improved-sigma") return WeightScheme::ImprovedSigma;
    throw std::invalid_argument("unknown scheme: " + s);
}

inline std::string scheme_name(WeightScheme s) {
    switch (s) {
        case WeightScheme::TraditionalDensity: return "traditional";
        case WeightScheme::ImprovedDensity: return "improved";
        case WeightScheme::TraditionalSigma: return "traditional-sigma";
        case WeightScheme::ImprovedSigma: return "improved-sigma";
    }
    return "?";
}

/// Avocado single-update experiment parameters. The default protocol pins
/// the measurement at the printed value and scores the estimate against the
/// mean of the grid-evaluated reference posterior; `simulate_measurements`
/// switches to redrawn truth plus simulated noisy measurements per trial.
struct AvocadoConfig {
    double noise_std = 0.4;
    double kernel_scale = 0.8;  // multiplies the Silverman kernel covariance
    bool simulate_measurements = false;
    // KLD grid
    int grid_nodes = 201;
    double grid_x_min = -6.0, grid_x_max = 2.0;
    double grid_y_min = -4.0, grid_y_max = 4.0;
    KldOptions kld = {1e-10, false};
    bool kld_common_support = false;  // true: score only nodes where both fields exceed the floor
};

struct NrhoConfig {
    int orbits = 5;
    int tracklets_per_orbit = 3;
    double tracklet_duration_s = 2.5 * 3600.0;
    double cadence_s = 600.0;
    double divergence_gate_lu = 0.1;  // position RMSE flag threshold
    double bandwidth_scale = 1.0;     // multiplies the Silverman kernel covariance
    bool shrink_kernel_means = false;
    double post_resample_inflation = 1.0;
};

struct LinearCheckConfig {
    int cases = 500;
    int max_bruf_steps = 20;
    double tolerance = 1e-8;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::Avocado;
    UpdaterSpec updater = UpdaterSpec::ekf();
    WeightScheme scheme = WeightScheme::TraditionalDensity;
    WeightOptions weight_options = {};
    int components = 100;
    int monte_carlo = 100;
    std::uint64_t seed = 0;
    IntegratorConfig integrator = {};
    AvocadoConfig avocado = {};
    NrhoConfig nrho = {};
    LinearCheckConfig linear_check = {};
    unsigned threads = 0;  // 0: hardware concurrency
    double max_flagged_fraction = 0.5;
    std::string output_path;
    std::string trial_csv_path;
    std::string grid_dump_prefix;
};

inline void apply_json_overrides(ScenarioConfig& cfg, const nlohmann::json& j) {
    if (j.contains("updater")) cfg.updater.kind = parse_updater(j["updater"].get<std::string>());
    if (j.contains("scheme")) cfg.scheme = parse_scheme(j["scheme"].get<std::string>());
    if (j.contains("components")) cfg.components = j["components"].get<int>();
    if (j.contains("monte_carlo")) cfg.monte_carlo = j["monte_carlo"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bruf_n")) cfg.updater.bruf_steps = j["bruf_n"].get<int>();
    if (j.contains("ut_alpha")) cfg.updater.ut.alpha = j["ut_alpha"].get<double>();
    if (j.contains("ut_beta")) cfg.updater.ut.beta = j["ut_beta"].get<double>();
    if (j.contains("ut_kappa")) cfg.updater.ut.kappa = j["ut_kappa"].get<double>();
    if (j.contains("rel_tol")) cfg.integrator.rel_tol = j["rel_tol"].get<double>();
    if (j.contains("abs_tol")) cfg.integrator.abs_tol = j["abs_tol"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<unsigned>();
    if (j.contains("max_flagged_fraction"))
        cfg.max_flagged_fraction = j["max_flagged_fraction"].get<double>();
    if (j.contains("output")) cfg.output_path = j["output"].get<std::string>();
    if (j.contains("trial_csv")) cfg.trial_csv_path = j["trial_csv"].get<std::string>();
    if (j.contains("grid_dump_prefix"))
        cfg.grid_dump_prefix = j["grid_dump_prefix"].get<std::string>();
    if (j.contains("sigma_variant")) {
        const auto v = j["sigma_variant"].get<std::string>();
        if (v == "mean") cfg.weight_options.sigma_variant = SigmaWeightVariant::MeanForm;
        else if (v == "mixture") cfg.weight_options.sigma_variant = SigmaWeightVariant::MixtureForm;
        else if (v == "likelihood")
            cfg.weight_options.sigma_variant = SigmaWeightVariant::LikelihoodForm;
        else throw std::invalid_argument("unknown sigma_variant: " + v);
    }
    if (j.contains("avocado")) {
        const auto& a = j["avocado"];
        if (a.contains("noise_std")) cfg.avocado.noise_std = a["noise_std"].get<double>();
        if (a.contains("kernel_scale")) cfg.avocado.kernel_scale = a["kernel_scale"].get<double>();
        if (a.contains("simulate_measurements"))
            cfg.avocado.simulate_measurements = a["simulate_measurements"].get<bool>();
        if (a.contains("grid_nodes")) cfg.avocado.grid_nodes = a["grid_nodes"].get<int>();
        if (a.contains("kld_floor")) cfg.avocado.kld.floor = a["kld_floor"].get<double>();
        if (a.contains("kld_per_node_prefactor"))
            cfg.avocado.kld.per_node_prefactor = a["kld_per_node_prefactor"].get<bool>();
        if (a.contains("kld_common_support"))
            cfg.avocado.kld_common_support = a["kld_common_support"].get<bool>();
    }
    if (j.contains("nrho")) {
        const auto& n = j["nrho"];
        if (n.contains("orbits")) cfg.nrho.orbits = n["orbits"].get<int>();
        if (n.contains("tracklets_per_orbit"))
            cfg.nrho.tracklets_per_orbit = n["tracklets_per_orbit"].get<int>();
        if (n.contains("tracklet_duration_s"))
            cfg.nrho.tracklet_duration_s = n["tracklet_duration_s"].get<double>();
        if (n.contains("cadence_s")) cfg.nrho.cadence_s = n["cadence_s"].get<double>();
        if (n.contains("divergence_gate_lu"))
            cfg.nrho.divergence_gate_lu = n["divergence_gate_lu"].get<double>();
        if (n.contains("bandwidth_scale"))
            cfg.nrho.bandwidth_scale = n["bandwidth_scale"].get<double>();
        if (n.contains("shrink_kernel_means"))
            cfg.nrho.shrink_kernel_means = n["shrink_kernel_means"].get<bool>();
        if (n.contains("post_resample_inflation"))
            cfg.nrho.post_resample_inflation = n["post_resample_inflation"].get<double>();
    }
    if (j.contains("linear_check")) {
        const auto& l = j["linear_check"];
        if (l.contains("cases")) cfg.linear_check.cases = l["cases"].get<int>();
        if (l.contains("max_bruf_steps"))
            cfg.linear_check.max_bruf_steps = l["max_bruf_steps"].get<int>();
        if (l.contains("tolerance")) cfg.linear_check.tolerance = l["tolerance"].get<double>();
    }
}

inline void load_config_file(ScenarioConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    apply_json_overrides(cfg, j);
}

}  // namespace gmf::harness
