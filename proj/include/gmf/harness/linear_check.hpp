#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gmf/gaussian.hpp"
#include "gmf/harness/config.hpp"
#include "gmf/harness/report.hpp"
#include "gmf/measurement_model.hpp"
#include "gmf/parallel.hpp"
#include "gmf/random.hpp"
#include "gmf/weights.hpp"

namespace gmf::harness {

namespace detail {

inline MatrixXd random_spd(RandomStream& rng, Eigen::Index n, double ridge) {
    MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
    return symmetrize(a * a.transpose()) + ridge * MatrixXd::Identity(n, n);
}

/// Mixture with a shared component covariance; the equivalence theorem's
/// constant-innovation-covariance hypothesis requires it.
inline GaussianMixture random_shared_cov_mixture(RandomStream& rng, Eigen::Index n_x,
                                                 int n_comp) {
    const MatrixXd cov = random_spd(rng, n_x, 0.1);
    GaussianMixture mix;
    VectorXd raw(n_comp);
    for (int i = 0; i < n_comp; ++i) raw[i] = rng.uniform() + 0.05;
    raw /= raw.sum();
    for (int i = 0; i < n_comp; ++i)
        mix.components.push_back({raw[i], 2.0 * rng.normal_vector(n_x), cov});
    return mix;
}

inline VectorXd scheme_weights(const GaussianMixture& mix, const MeasurementModel& model,
                               const VectorXd& y, const UpdaterSpec& updater, WeightScheme scheme,
                               const WeightOptions& opts) {
    const GaussianMixture post = gmm_measurement_update(mix, model, y, updater, scheme, opts);
    return post.weights();
}

}  // namespace detail

struct LinearCheckCase {
    std::string family;
    double discrepancy = 0.0;
};

struct LinearCheckResult {
    double max_discrepancy = 0.0;
    std::string worst_family;
    int cases = 0;
    bool pass(double tol) const { return max_discrepancy < tol; }
};

/// Fuzz random linear models across every updater family; traditional and
/// improved weight schemes must produce identical normalized weights.
/// The traditional-sigma comparison uses the transform-mean form, the only
/// sigma variant that is exact for linear maps.
inline LinearCheckResult run_linear_check_core(const ScenarioConfig& cfg) {
    const int cases = cfg.linear_check.cases;
    std::vector<double> discrepancy(static_cast<std::size_t>(cases), 0.0);
    std::vector<std::string> families(static_cast<std::size_t>(cases));

    parallel_for(
        static_cast<std::size_t>(cases),
        [&](std::size_t c) {
            RandomStream rng(cfg.seed, {0x11c4, c});
            const Eigen::Index n_x = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
            const Eigen::Index n_y = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
            const int n_comp = 2 + static_cast<int>(rng.next_u64() % 7);

            MatrixXd h(n_y, n_x);
            for (Eigen::Index i = 0; i < n_y; ++i)
                for (Eigen::Index j = 0; j < n_x; ++j) h(i, j) = rng.normal();
            const MeasurementModel model = make_linear_model(h, detail::random_spd(rng, n_y, 0.1));
            const GaussianMixture mix = detail::random_shared_cov_mixture(rng, n_x, n_comp);
            const VectorXd y = h * (2.0 * rng.normal_vector(n_x)) + rng.normal_vector(n_y);

            const int bruf_n =
                1 + static_cast<int>(rng.next_u64() %
                                     static_cast<std::uint64_t>(cfg.linear_check.max_bruf_steps));

            WeightOptions sigma_opts;
            sigma_opts.sigma_variant = SigmaWeightVariant::MeanForm;

            struct Family {
                const char* name;
                UpdaterSpec updater;
                WeightScheme trad;
                WeightScheme improved;
                WeightOptions opts;
            };
            const Family fams[] = {
                {"ekf", UpdaterSpec::ekf(), WeightScheme::TraditionalDensity,
                 WeightScheme::ImprovedDensity, WeightOptions{}},
                {"bruf", UpdaterSpec::bruf(bruf_n), WeightScheme::TraditionalDensity,
                 WeightScheme::ImprovedDensity, WeightOptions{}},
                {"ukf", UpdaterSpec::ukf(), WeightScheme::TraditionalSigma,
                 WeightScheme::ImprovedSigma, sigma_opts},
                {"ckf", UpdaterSpec::ckf(), WeightScheme::TraditionalSigma,
                 WeightScheme::ImprovedSigma, sigma_opts},
            };
            double worst = 0.0;
            std::string worst_family;
            for (const auto& fam : fams) {
                const VectorXd wt = detail::scheme_weights(mix, model, y, fam.updater, fam.trad, fam.opts);
                const VectorXd wi =
                    detail::scheme_weights(mix, model, y, fam.updater, fam.improved, fam.opts);
                const double d = (wt - wi).cwiseAbs().maxCoeff();
                if (d > worst) {
                    worst = d;
                    worst_family = fam.name;
                }
            }
            discrepancy[c] = worst;
            families[c] = worst_family;
        },
        cfg.threads);

    LinearCheckResult res;
    res.cases = cases;
    for (std::size_t c = 0; c < discrepancy.size(); ++c) {
        if (discrepancy[c] > res.max_discrepancy) {
            res.max_discrepancy = discrepancy[c];
            res.worst_family = families[c];
        }
    }
    return res;
}

inline RunReport run_linear_check(const ScenarioConfig& cfg) {
    const LinearCheckResult res = run_linear_check_core(cfg);
    RunReport report;
    report.scenario = "linear-check";
    report.seed = cfg.seed;
    MetricsReport rep;
    rep.label = "linear-equivalence";
    rep.components = 0;
    rep.trials = res.cases;
    rep.rmse = res.max_discrepancy;  // reported as the discrepancy metric
    report.records.push_back(rep);
    if (!res.pass(cfg.linear_check.tolerance))
        throw std::runtime_error("linear equivalence violated: max discrepancy " +
                                 std::to_string(res.max_discrepancy) + " in family " +
                                 res.worst_family);
    return report;
}

}  // namespace gmf::harness
