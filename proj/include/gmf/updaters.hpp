#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

#include "gmf/gaussian.hpp"
#include "gmf/linalg.hpp"
#include "gmf/measurement_model.hpp"
#include "gmf/unscented.hpp"

namespace gmf {

/// Per-component byproducts of a measurement update, consumed by the
/// weight schemes. `predicted_measurement` is h at the original prior mean
/// for EKF/BRUF and the transform-predicted mean for sigma updaters.
struct UpdateArtifacts {
    GaussianComponent posterior;              // weight copied from the prior component
    MatrixXd gain;                            // K (n_x x n_y)
    std::optional<MatrixXd> prior_jacobian;   // H evaluated at the prior mean
    MatrixXd prior_innovation_cov;            // P_yy about the prior
    VectorXd predicted_measurement;
    std::optional<SigmaPointSet> prior_sigma;
    GaussianComponent prior_component;
};

namespace detail {

inline void check_update_inputs(const GaussianComponent& comp, const MeasurementModel& model,
                                const VectorXd& y) {
    if (comp.dimension() != model.n_x) throw std::invalid_argument("state dimension mismatch");
    if (y.size() != model.n_y) throw std::invalid_argument("measurement dimension mismatch");
    if (!all_finite(comp.mean) || !all_finite(comp.covariance) || !all_finite(y))
        throw std::runtime_error("non-finite input");
}

}  // namespace detail

/// Standard per-component EKF update. Posterior covariance is
/// P - K H P, symmetrized.
inline UpdateArtifacts ekf_update(const GaussianComponent& comp, const MeasurementModel& model,
                                  const VectorXd& y) {
    detail::check_update_inputs(comp, model, y);
    if (!model.has_jacobian()) throw std::invalid_argument("EKF update requires a Jacobian");

    const MatrixXd h_bar = model.jacobian(comp.mean);
    const MatrixXd p_yy = symmetrize(h_bar * comp.covariance * h_bar.transpose() + model.noise_cov);
    // K = P H^T P_yy^-1 via factorization solve
    const MatrixXd gain =
        cholesky_with_jitter(p_yy).solve(h_bar * comp.covariance).transpose();
    const VectorXd predicted = model.h(comp.mean);
    const VectorXd innovation = model.innovation(y, predicted);

    UpdateArtifacts art;
    art.posterior.weight = comp.weight;
    art.posterior.mean = comp.mean + gain * innovation;
    art.posterior.covariance = symmetrize(comp.covariance - gain * h_bar * comp.covariance);
    art.gain = gain;
    art.prior_jacobian = h_bar;
    art.prior_innovation_cov = p_yy;
    art.predicted_measurement = predicted;
    art.prior_component = comp;
    return art;
}

/// Bayesian recursive update: N EKF-style passes with noise inflated to
/// N*R, relinearizing at each iterate. The artifacts (gain, Jacobian,
/// innovation covariance, predicted measurement) are all evaluated at the
/// original prior, which is what the weight formulas consume.
inline UpdateArtifacts bruf_update(const GaussianComponent& comp, const MeasurementModel& model,
                                   const VectorXd& y, int n_steps) {
    detail::check_update_inputs(comp, model, y);
    if (n_steps < 1) throw std::invalid_argument("BRUF requires N >= 1");
    if (!model.has_jacobian()) throw std::invalid_argument("BRUF update requires a Jacobian");

    const MatrixXd inflated = static_cast<double>(n_steps) * model.noise_cov;
    VectorXd x = comp.mean;
    MatrixXd p = comp.covariance;
    for (int j = 0; j < n_steps; ++j) {
        const MatrixXd h_j = model.jacobian(x);
        const MatrixXd p_yy_j = symmetrize(h_j * p * h_j.transpose() + inflated);
        const MatrixXd k_j = cholesky_with_jitter(p_yy_j).solve(h_j * p).transpose();
        x += k_j * model.innovation(y, model.h(x));
        p = symmetrize(p - k_j * h_j * p);
    }

    const MatrixXd h_bar = model.jacobian(comp.mean);
    const MatrixXd p_yy =
        symmetrize(h_bar * comp.covariance * h_bar.transpose() + model.noise_cov);
    const MatrixXd gain =
        cholesky_with_jitter(p_yy).solve(h_bar * comp.covariance).transpose();

    UpdateArtifacts art;
    art.posterior.weight = comp.weight;
    art.posterior.mean = x;
    art.posterior.covariance = p;
    art.gain = gain;
    art.prior_jacobian = h_bar;
    art.prior_innovation_cov = p_yy;
    art.predicted_measurement = model.h(comp.mean);
    art.prior_component = comp;
    return art;
}

/// Unscented measurement update. The posterior covariance uses the
/// standard sigma-point form P - K P_yy K^T (which coincides with the
/// Jacobian form for linear models).
inline UpdateArtifacts sigma_update(const GaussianComponent& comp, const MeasurementModel& model,
                                    const VectorXd& y, const UnscentedParams& params) {
    detail::check_update_inputs(comp, model, y);

    SigmaPointSet sigma = unscented_sigma_points(comp.mean, comp.covariance, params);
    const Eigen::Index count = sigma.count();

    std::vector<VectorXd> mapped(static_cast<std::size_t>(count));
    for (Eigen::Index l = 0; l < count; ++l)
        mapped[static_cast<std::size_t>(l)] = model.h(sigma.points[static_cast<std::size_t>(l)]);

    VectorXd y_bar = VectorXd::Zero(model.n_y);
    for (Eigen::Index l = 0; l < count; ++l)
        y_bar += sigma.mean_weights[l] * mapped[static_cast<std::size_t>(l)];

    MatrixXd p_yy = model.noise_cov;
    MatrixXd p_xy = MatrixXd::Zero(model.n_x, model.n_y);
    for (Eigen::Index l = 0; l < count; ++l) {
        const VectorXd dy = mapped[static_cast<std::size_t>(l)] - y_bar;
        const VectorXd dx = sigma.points[static_cast<std::size_t>(l)] - comp.mean;
        p_yy += sigma.cov_weights[l] * dy * dy.transpose();
        p_xy += sigma.cov_weights[l] * dx * dy.transpose();
    }
    p_yy = symmetrize(p_yy);
    const MatrixXd gain = cholesky_with_jitter(p_yy).solve(p_xy.transpose()).transpose();

    UpdateArtifacts art;
    art.posterior.weight = comp.weight;
    art.posterior.mean = comp.mean + gain * model.innovation(y, y_bar);
    art.posterior.covariance =
        symmetrize(comp.covariance - gain * p_yy * gain.transpose());
    art.gain = gain;
    art.prior_innovation_cov = p_yy;
    art.predicted_measurement = y_bar;
    art.prior_sigma = std::move(sigma);
    art.prior_component = comp;
    return art;
}

/// Which per-component updater drives a mixture update.
struct UpdaterSpec {
    enum class Kind { Ekf, Bruf, Ukf, Ckf };
    Kind kind = Kind::Ekf;
    int bruf_steps = 10;
    UnscentedParams ut = ukf_params();

    static UpdaterSpec ekf() { return {Kind::Ekf, 10, ukf_params()}; }
    static UpdaterSpec bruf(int n) { return {Kind::Bruf, n, ukf_params()}; }
    static UpdaterSpec ukf(UnscentedParams p = ukf_params()) { return {Kind::Ukf, 10, p}; }
    static UpdaterSpec ckf() { return {Kind::Ckf, 10, ckf_params()}; }

    bool sigma_based() const { return kind == Kind::Ukf || kind == Kind::Ckf; }

    UnscentedParams effective_ut() const { return kind == Kind::Ckf ? ckf_params() : ut; }
};

inline UpdateArtifacts apply_updater(const GaussianComponent& comp, const MeasurementModel& model,
                                     const VectorXd& y, const UpdaterSpec& spec) {
    switch (spec.kind) {
        case UpdaterSpec::Kind::Ekf:
            return ekf_update(comp, model, y);
        case UpdaterSpec::Kind::Bruf:
            return bruf_update(comp, model, y, spec.bruf_steps);
        case UpdaterSpec::Kind::Ukf:
            return sigma_update(comp, model, y, spec.ut);
        case UpdaterSpec::Kind::Ckf:
            return sigma_update(comp, model, y, ckf_params());
    }
    throw std::logic_error("unreachable updater kind");
}

}  // namespace gmf
