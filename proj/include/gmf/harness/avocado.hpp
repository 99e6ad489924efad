#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "gmf/engmf.hpp"
#include "gmf/gaussian.hpp"
#include "gmf/harness/config.hpp"
#include "gmf/harness/report.hpp"
#include "gmf/metrics.hpp"
#include "gmf/models.hpp"
#include "gmf/parallel.hpp"
#include "gmf/random.hpp"
#include "gmf/weights.hpp"

namespace gmf::harness {

inline VectorXd avocado_prior_mean() {
    VectorXd m(2);
    m << -3.5, 0.0;
    return m;
}

inline MatrixXd avocado_prior_cov() {
    MatrixXd p(2, 2);
    p << 1.0, -0.5, -0.5, 1.0;
    return p;
}

inline VectorXd avocado_measured_value() { return VectorXd::Zero(2); }

/// Exact per-component measurement marginals ln p_i(y) for the Avocado
/// model, by trapezoid quadrature of kernel(x) * N(y; h(x), R) over the
/// likelihood support. Serves as the weight-accuracy oracle behind the KLD
/// reference mixture; independent of every filter code path.
inline VectorXd avocado_exact_log_marginals(const std::vector<VectorXd>& means,
                                            const MatrixXd& kernel_cov, const VectorXd& y,
                                            double noise_std) {
    // support bound: |h_i - y_i| <= sqrt(140) sigma keeps relative
    // truncation error below e^-70
    const double reach = std::sqrt(140.0) * noise_std;
    const double x_max =
        std::sqrt(std::max(std::max(y[0], y[1]), 0.0) + reach) + 1e-9;
    const auto llt = cholesky_with_jitter(kernel_cov);
    const MatrixXd l = llt.matrixL();
    const double sigma_min = std::min(l(0, 0), l(1, 1));
    const double step = std::min(0.02, sigma_min / 8.0);
    const Eigen::Index nodes = static_cast<Eigen::Index>(std::ceil(2.0 * x_max / step)) + 1;
    const double h = 2.0 * x_max / static_cast<double>(nodes - 1);
    const double cell = h * h;

    VectorXd axis(nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) axis[i] = -x_max + h * static_cast<double>(i);

    // log-likelihood on the strip, computed once
    const double r_var = noise_std * noise_std;
    const double log_norm_lik = -kLogTwoPi - std::log(r_var);
    MatrixXd log_lik(nodes, nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const double d0 = axis[i] * axis[i] - y[0];
        for (Eigen::Index j = 0; j < nodes; ++j) {
            const double d1 = axis[j] * axis[j] - y[1];
            log_lik(i, j) = log_norm_lik - 0.5 * (d0 * d0 + d1 * d1) / r_var;
        }
    }

    const double log_norm_ker = -kLogTwoPi - 0.5 * log_det_from_llt(llt);
    const double l00 = l(0, 0), l10 = l(1, 0), l11 = l(1, 1);
    VectorXd out(static_cast<Eigen::Index>(means.size()));
    MatrixXd vals(nodes, nodes);
    for (std::size_t c = 0; c < means.size(); ++c) {
        const VectorXd& m = means[c];
        double peak = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < nodes; ++i) {
            const double u = (axis[i] - m[0]) / l00;
            for (Eigen::Index j = 0; j < nodes; ++j) {
                const double v = (axis[j] - m[1] - l10 * u) / l11;
                const double lv = log_norm_ker - 0.5 * (u * u + v * v) + log_lik(i, j);
                vals(i, j) = lv;
                peak = std::max(peak, lv);
            }
        }
        double acc = 0.0;
        for (Eigen::Index i = 0; i < nodes; ++i)
            for (Eigen::Index j = 0; j < nodes; ++j) acc += std::exp(vals(i, j) - peak);
        out[static_cast<Eigen::Index>(c)] = peak + std::log(acc * cell);
    }
    return out;
}

/// Squared-log-difference score of the printed form, with the floor applied
/// either by clamping both fields or by restricting to their common support.
inline double avocado_kld(const GridField& p, const GridField& q, const AvocadoConfig& cfg) {
    if (!cfg.kld_common_support) return kld_grid(p, q, cfg.kld);
    if (!p.same_grid(q)) throw std::invalid_argument("grid mismatch");
    const double s_x = static_cast<double>(p.axis_x.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.values.rows(); ++i)
        for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
            const double pv = p.values(i, j), qv = q.values(i, j);
            if (pv < cfg.kld.floor || qv < cfg.kld.floor) continue;
            const double d = std::log(pv) - std::log(qv);
            sum += 0.5 * d * d;
        }
    return sum / (cfg.kld.per_node_prefactor ? s_x * s_x : s_x);
}

struct AvocadoMethodResult {
    MetricsReport report;
    GridField mean_field;  // MC-averaged posterior density
};

struct AvocadoRunOutput {
    std::vector<AvocadoMethodResult> methods;  // one per requested scheme
    GridField reference_field;                 // MC-averaged reference mixture
    std::vector<PerTrialRow> per_trial;
};

namespace detail {

struct AvocadoTrial {
    std::vector<double> scheme_rmse;
    std::vector<MatrixXd> scheme_fields;
    MatrixXd reference_field;
    std::vector<double> scheme_kld;  // simulate mode only (per-trial truth grids)
    bool collapsed = false;
};

}  // namespace detail

/// Shared single-update experiment: one updater, one or more weight schemes
/// evaluated on identical component draws (paired comparison).
inline AvocadoRunOutput run_avocado_methods(const ScenarioConfig& cfg, const UpdaterSpec& updater,
                                            const std::vector<WeightScheme>& schemes) {
    const int m_comps = cfg.components;
    const int trials = cfg.monte_carlo;
    const VectorXd mu0 = avocado_prior_mean();
    const MatrixXd p0 = avocado_prior_cov();
    const MatrixXd l0 = cholesky_lower(p0);
    const MeasurementModel model = avocado_model(cfg.avocado.noise_std);
    const double beta_sq = silverman_bandwidth(2, m_comps);
    const MatrixXd kernel = cfg.avocado.kernel_scale * beta_sq * p0;

    VectorXd axis_x(cfg.avocado.grid_nodes), axis_y(cfg.avocado.grid_nodes);
    for (int i = 0; i < cfg.avocado.grid_nodes; ++i) {
        const double f = static_cast<double>(i) / (cfg.avocado.grid_nodes - 1);
        axis_x[i] = cfg.avocado.grid_x_min + f * (cfg.avocado.grid_x_max - cfg.avocado.grid_x_min);
        axis_y[i] = cfg.avocado.grid_y_min + f * (cfg.avocado.grid_y_max - cfg.avocado.grid_y_min);
    }

    // Reference posterior of the exact Gaussian prior, on a wide fine grid;
    // its mean is the scoring truth in the fixed-measurement protocol.
    const VectorXd y_fixed = avocado_measured_value();
    GaussianMixture true_prior;
    true_prior.components.push_back({1.0, mu0, p0});
    VectorXd ref_axis_x(961), ref_axis_y(961);
    for (int i = 0; i < 961; ++i) {
        const double f = static_cast<double>(i) / 960.0;
        ref_axis_x[i] = -8.0 + f * 12.0;
        ref_axis_y[i] = -6.0 + f * 12.0;
    }
    VectorXd truth_reference(2);
    {
        const GridField ref =
            true_posterior_grid(true_prior, model, y_fixed, ref_axis_x, ref_axis_y);
        const VectorXd wx = GridField::trapezoid_weights(ref_axis_x);
        const VectorXd wy = GridField::trapezoid_weights(ref_axis_y);
        truth_reference[0] = (ref_axis_x.cwiseProduct(wx)).dot(ref.values * wy);
        truth_reference[1] = wx.dot(ref.values * ref_axis_y.cwiseProduct(wy));
    }

    std::vector<detail::AvocadoTrial> results(static_cast<std::size_t>(trials));
    parallel_for(
        static_cast<std::size_t>(trials),
        [&](std::size_t t) {
            detail::AvocadoTrial& out = results[t];
            RandomStream comp_stream(cfg.seed, {0xa70c, t, 1});
            RandomStream truth_stream(cfg.seed, {0xa70c, t, 2});
            RandomStream meas_stream(cfg.seed, {0xa70c, t, 3});

            VectorXd truth = truth_reference;
            VectorXd y = y_fixed;
            if (cfg.avocado.simulate_measurements) {
                truth = truth_stream.gaussian(mu0, l0);
                y = model.h(truth) + cfg.avocado.noise_std * meas_stream.normal_vector(2);
            }

            GaussianMixture prior;
            prior.components.reserve(static_cast<std::size_t>(m_comps));
            std::vector<VectorXd> means(static_cast<std::size_t>(m_comps));
            for (int i = 0; i < m_comps; ++i) {
                means[static_cast<std::size_t>(i)] = comp_stream.gaussian(mu0, l0);
                prior.components.push_back(
                    {1.0 / m_comps, means[static_cast<std::size_t>(i)], kernel});
            }

            try {
                // per-component updates shared across schemes
                std::vector<UpdateArtifacts> artifacts;
                artifacts.reserve(prior.components.size());
                for (const auto& comp : prior.components)
                    artifacts.push_back(apply_updater(comp, model, y, updater));

                GaussianMixture posterior_shape;
                posterior_shape.components.reserve(artifacts.size());
                for (const auto& a : artifacts) posterior_shape.components.push_back(a.posterior);

                // oracle reference: same components, exact weights
                const VectorXd exact_logs = avocado_exact_log_marginals(
                    means, kernel, y, cfg.avocado.noise_std);
                const VectorXd exact_weights = normalize_log_weights(exact_logs);
                GaussianMixture reference = posterior_shape;
                for (int i = 0; i < m_comps; ++i)
                    reference.components[static_cast<std::size_t>(i)].weight = exact_weights[i];
                out.reference_field =
                    mixture_pdf_on_grid(reference, axis_x, axis_y).values;

                GridField truth_grid;
                if (cfg.avocado.simulate_measurements)
                    truth_grid = true_posterior_grid(true_prior, model, y, axis_x, axis_y);

                for (const WeightScheme scheme : schemes) {
                    VectorXd log_w(m_comps);
                    for (int i = 0; i < m_comps; ++i)
                        log_w[i] = log_weight(scheme, prior.components[static_cast<std::size_t>(i)].weight,
                                              artifacts[static_cast<std::size_t>(i)], model, y,
                                              updater, cfg.weight_options);
                    const VectorXd w = normalize_log_weights(log_w);
                    GaussianMixture posterior = posterior_shape;
                    for (int i = 0; i < m_comps; ++i)
                        posterior.components[static_cast<std::size_t>(i)].weight = w[i];
                    const auto [mean, cov] = mixture_moments(posterior);
                    (void)cov;
                    out.scheme_rmse.push_back(rmse(truth, mean));
                    out.scheme_fields.push_back(
                        mixture_pdf_on_grid(posterior, axis_x, axis_y).values);
                    if (cfg.avocado.simulate_measurements) {
                        GridField pf(axis_x, axis_y);
                        pf.values = out.scheme_fields.back();
                        out.scheme_kld.push_back(avocado_kld(pf, truth_grid, cfg.avocado));
                    }
                }
            } catch (const std::exception&) {
                out.collapsed = true;
            }
        },
        cfg.threads);

    AvocadoRunOutput output;
    output.reference_field = GridField(axis_x, axis_y);
    int completed = 0;
    for (const auto& r : results)
        if (!r.collapsed) ++completed;

    // deterministic serial reduction
    std::vector<CompensatedSum> rmse_sums(schemes.size());
    std::vector<CompensatedSum> kld_sums(schemes.size());
    std::vector<MatrixXd> field_sums(
        schemes.size(), MatrixXd::Zero(axis_x.size(), axis_y.size()));
    MatrixXd ref_sum = MatrixXd::Zero(axis_x.size(), axis_y.size());
    for (int t = 0; t < trials; ++t) {
        const auto& r = results[static_cast<std::size_t>(t)];
        if (r.collapsed) continue;
        ref_sum += r.reference_field;
        for (std::size_t s = 0; s < schemes.size(); ++s) {
            rmse_sums[s].add(r.scheme_rmse[s]);
            field_sums[s] += r.scheme_fields[s];
            if (!r.scheme_kld.empty()) kld_sums[s].add(r.scheme_kld[s]);
        }
    }
    if (completed == 0) throw std::runtime_error("all avocado trials collapsed");
    ref_sum /= static_cast<double>(completed);
    output.reference_field.values = ref_sum;

    for (std::size_t s = 0; s < schemes.size(); ++s) {
        AvocadoMethodResult mr;
        mr.mean_field = GridField(axis_x, axis_y);
        mr.mean_field.values = field_sums[s] / static_cast<double>(completed);
        mr.report.label = "gmf-" + updater_name(updater.kind) + "-" + scheme_name(schemes[s]);
        mr.report.components = m_comps;
        mr.report.trials = completed;
        mr.report.failed_trials = trials - completed;
        mr.report.flagged_trials = mr.report.failed_trials;
        mr.report.rmse = rmse_sums[s].mean();
        if (cfg.avocado.simulate_measurements)
            mr.report.kld = kld_sums[s].mean();
        else
            mr.report.kld = avocado_kld(mr.mean_field, output.reference_field, cfg.avocado);
        output.methods.push_back(std::move(mr));
    }

    for (int t = 0; t < trials; ++t) {
        const auto& r = results[static_cast<std::size_t>(t)];
        if (r.collapsed) continue;
        for (std::size_t s = 0; s < schemes.size(); ++s)
            output.per_trial.push_back(
                {output.methods[s].report.label, t, 0, r.scheme_rmse[s],
                 std::numeric_limits<double>::quiet_NaN()});
    }
    return output;
}

inline RunReport run_avocado(const ScenarioConfig& cfg) {
    AvocadoRunOutput out = run_avocado_methods(cfg, cfg.updater, {cfg.scheme});
    RunReport report;
    report.scenario = "avocado";
    report.seed = cfg.seed;
    report.records.push_back(out.methods.front().report);
    report.per_trial = std::move(out.per_trial);
    if (!cfg.grid_dump_prefix.empty()) {
        write_grid_csv(out.methods.front().mean_field,
                       cfg.grid_dump_prefix + "_posterior.csv");
        write_grid_csv(out.reference_field, cfg.grid_dump_prefix + "_reference.csv");
    }
    return report;
}

}  // namespace gmf::harness
