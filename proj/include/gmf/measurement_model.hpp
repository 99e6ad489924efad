#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <utility>

#include "gmf/linalg.hpp"

namespace gmf {

/// Nonlinear measurement map y = h(x) + eta with analytic Jacobian and
/// noise covariance R. `residual` computes measurement-space innovations;
/// models with angular outputs override it to wrap.
struct MeasurementModel {
    std::function<VectorXd(const VectorXd&)> h;
    std::function<MatrixXd(const VectorXd&)> jacobian;  // may be empty for sigma-point-only use
    MatrixXd noise_cov;
    Eigen::Index n_x = 0;
    Eigen::Index n_y = 0;
    std::function<VectorXd(const VectorXd&, const VectorXd&)> residual =
        [](const VectorXd& y, const VectorXd& predicted) { return y - predicted; };

    bool has_jacobian() const { return static_cast<bool>(jacobian); }

    VectorXd innovation(const VectorXd& y, const VectorXd& predicted) const {
        return residual(y, predicted);
    }
};

/// Central finite differences of h; testing fallback only, the experiment
/// models all carry analytic Jacobians.
inline MatrixXd numerical_jacobian(const std::function<VectorXd(const VectorXd&)>& h,
                                   const VectorXd& x) {
    const VectorXd y0 = h(x);
    MatrixXd jac(y0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double step = 1e-6 * (1.0 + std::abs(x[j]));
        VectorXd xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        jac.col(j) = (h(xp) - h(xm)) / (2.0 * step);
    }
    return jac;
}

/// y = H x + eta.
inline MeasurementModel make_linear_model(MatrixXd h_matrix, MatrixXd noise_cov) {
    MeasurementModel m;
    m.n_x = h_matrix.cols();
    m.n_y = h_matrix.rows();
    m.noise_cov = std::move(noise_cov);
    if (m.noise_cov.rows() != m.n_y || m.noise_cov.cols() != m.n_y)
        throw std::invalid_argument("linear model noise covariance dimension mismatch");
    m.h = [h_matrix](const VectorXd& x) -> VectorXd { return h_matrix * x; };
    m.jacobian = [h_matrix](const VectorXd&) -> MatrixXd { return h_matrix; };
    return m;
}

}  // namespace gmf
