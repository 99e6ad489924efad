#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "gmf/linalg.hpp"

namespace gmf {

/// Three-parameter scaled unscented transform tuning.
struct UnscentedParams {
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 3.0;

    double lambda(Eigen::Index n_x) const {
        return alpha * alpha * (static_cast<double>(n_x) + kappa) - static_cast<double>(n_x);
    }
};

/// UKF tuning used throughout the experiments (alpha=1, beta=2, kappa=3).
inline UnscentedParams ukf_params() { return {1.0, 2.0, 3.0}; }
/// Cubature points expressed as a UKF with alpha=1, beta=0, kappa=0.
inline UnscentedParams ckf_params() { return {1.0, 0.0, 0.0}; }

/// 2 n_x + 1 deterministic points with mean and covariance weights.
struct SigmaPointSet {
    std::vector<VectorXd> points;
    VectorXd mean_weights;
    VectorXd cov_weights;

    Eigen::Index count() const { return static_cast<Eigen::Index>(points.size()); }

    VectorXd weighted_mean() const {
        VectorXd m = VectorXd::Zero(points.front().size());
        for (Eigen::Index l = 0; l < count(); ++l)
            m += mean_weights[l] * points[static_cast<std::size_t>(l)];
        return m;
    }

    MatrixXd weighted_covariance(const VectorXd& mean) const {
        const Eigen::Index n = mean.size();
        MatrixXd cov = MatrixXd::Zero(n, n);
        for (Eigen::Index l = 0; l < count(); ++l) {
            const VectorXd d = points[static_cast<std::size_t>(l)] - mean;
            cov += cov_weights[l] * d * d.transpose();
        }
        return symmetrize(cov);
    }
};

/// Sigma points about (mean, cov): chi = [x, x +/- ((n_x+lambda) P)^{1/2} columns],
/// W_m0 = lambda/(n_x+lambda), W_c0 = W_m0 + (1 - alpha^2 + beta),
/// W_mi = W_ci = 1/(2(n_x+lambda)) for i >= 1.
inline SigmaPointSet unscented_sigma_points(const VectorXd& mean, const MatrixXd& cov,
                                            const UnscentedParams& params) {
    const Eigen::Index n_x = mean.size();
    const double lambda = params.lambda(n_x);
    const double scale = static_cast<double>(n_x) + lambda;
    if (!(scale > 0.0)) throw std::runtime_error("invalid unscented scaling");

    const MatrixXd root = cholesky_lower(scale * symmetrize(cov));

    SigmaPointSet set;
    set.points.reserve(static_cast<std::size_t>(2 * n_x + 1));
    set.points.push_back(mean);
    for (Eigen::Index i = 0; i < n_x; ++i) {
        set.points.push_back(mean + root.col(i));
        set.points.push_back(mean - root.col(i));
    }
    set.mean_weights = VectorXd::Constant(2 * n_x + 1, 1.0 / (2.0 * scale));
    set.cov_weights = set.mean_weights;
    set.mean_weights[0] = lambda / scale;
    set.cov_weights[0] = lambda / scale + (1.0 - params.alpha * params.alpha + params.beta);
    return set;
}

}  // namespace gmf
