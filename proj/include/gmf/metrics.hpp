#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "gmf/gaussian.hpp"
#include "gmf/measurement_model.hpp"

namespace gmf {

/// sqrt((1/n) * |truth - estimate|^2).
inline double rmse(const VectorXd& truth, const VectorXd& estimate) {
    if (truth.size() != estimate.size()) throw std::invalid_argument("rmse dimension mismatch");
    return std::sqrt((truth - estimate).squaredNorm() / static_cast<double>(truth.size()));
}

/// Position-only variant over the leading three states.
inline double rmse_position(const VectorXd& truth, const VectorXd& estimate) {
    return rmse(truth.head(3), estimate.head(3));
}

/// Scaled normalized estimation error squared
/// (1/n) (x - x^)^T P^-1 (x - x^), via factorization solve.
inline double snees(const VectorXd& truth, const VectorXd& mean, const MatrixXd& cov) {
    if (truth.size() != mean.size() || cov.rows() != truth.size())
        throw std::invalid_argument("snees dimension mismatch");
    const VectorXd d = truth - mean;
    return d.dot(spd_solve(cov, d)) / static_cast<double>(truth.size());
}

struct KldOptions {
    double floor = 1e-12;          // densities clamped before taking logs
    bool per_node_prefactor = false;  // true: 1/s_x^2 instead of the printed 1/s_x
};

/// The paper's discretized score (1/s_x) sum over nodes of
/// (1/2)(log P - log Q)^2. This is a squared-log-difference score, not the
/// textbook KL integral; it is implemented as printed so the experiment
/// tables are comparable. Requires a square grid.
inline double kld_grid(const GridField& p, const GridField& q, const KldOptions& opts = {}) {
    if (!p.same_grid(q)) throw std::invalid_argument("grid mismatch");
    if (p.axis_x.size() != p.axis_y.size())
        throw std::invalid_argument("kld_grid requires a square grid");
    const double s_x = static_cast<double>(p.axis_x.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.values.rows(); ++i)
        for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
            const double lp = std::log(std::max(p.values(i, j), opts.floor));
            const double lq = std::log(std::max(q.values(i, j), opts.floor));
            const double d = lp - lq;
            sum += 0.5 * d * d;
        }
    return sum / (opts.per_node_prefactor ? s_x * s_x : s_x);
}

/// Grid posterior oracle: prior density times measurement likelihood at each
/// node, normalized to unit trapezoid mass over the grid.
inline GridField true_posterior_grid(const GaussianMixture& prior, const MeasurementModel& model,
                                     const VectorXd& y, const VectorXd& axis_x,
                                     const VectorXd& axis_y) {
    if (prior.dimension() != 2 || model.n_x != 2)
        throw std::runtime_error("grid evaluation supports 2D only");
    GridField field = mixture_pdf_on_grid(prior, axis_x, axis_y);
    VectorXd node(2);
    for (Eigen::Index i = 0; i < axis_x.size(); ++i) {
        node[0] = axis_x[i];
        for (Eigen::Index j = 0; j < axis_y.size(); ++j) {
            node[1] = axis_y[j];
            const VectorXd res = model.innovation(y, model.h(node));
            field.values(i, j) *= std::exp(log_gaussian_residual_pdf(res, model.noise_cov));
        }
    }
    const double mass = field.trapezoid_mass();
    if (!(mass > 0.0)) throw std::runtime_error("posterior off-grid");
    field.values /= mass;
    return field;
}

/// Aggregate experiment output for one method configuration.
struct MetricsReport {
    std::string label;
    int components = 0;
    int trials = 0;
    int flagged_trials = 0;
    int failed_trials = 0;
    double rmse = 0.0;
    double rmse_position = 0.0;  // NRHO only
    std::optional<double> kld;   // 2D scenarios only
    double snees = 0.0;          // NRHO only
};

}  // namespace gmf
