#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gmf/gaussian.hpp"
#include "gmf/measurement_model.hpp"
#include "gmf/unscented.hpp"
#include "gmf/updaters.hpp"

namespace gmf {

/// The four weight-update schemes. Density kinds evaluate a single Gaussian
/// in measurement space; sigma kinds combine per-sigma-point contributions.
enum class WeightScheme {
    TraditionalDensity,  // N(y; h(x_prior), P_yy about the prior)
    ImprovedDensity,     // N(y; h(x_post), P_yy about the posterior)
    TraditionalSigma,    // sigma-point sums about the prior
    ImprovedSigma,       // importance-sampled sum about the posterior
};

/// Selectable forms of the traditional sigma-point weight.
enum class SigmaWeightVariant {
    MeanForm,        // density at the transform-predicted measurement mean
    MixtureForm,     // weighted sum of densities, shared innovation covariance
    LikelihoodForm,  // weighted sum of raw likelihoods (no P_yy needed)
};

/// The three algebraically equivalent posterior innovation covariances.
enum class PosteriorCovForm {
    Direct,   // H^ P^ H^T + R - H^ K R - (H^ K R)^T
    Inverse,  // (H^-H-)P^(H^-H-)^T + R Pyy^-1 R^T
    Joseph,   // (H^-H-)P^(H^-H-)^T + (I-H-K)Pyy(I-H-K)^T
};

struct PosteriorInnovationCov {
    MatrixXd value;
    PosteriorCovForm form_used = PosteriorCovForm::Joseph;
};

struct WeightOptions {
    SigmaWeightVariant sigma_variant = SigmaWeightVariant::MixtureForm;
    PosteriorCovForm cov_form = PosteriorCovForm::Joseph;
};

/// Prior-linearized innovation covariance H P H^T + R.
inline MatrixXd innovation_cov_prior(const MatrixXd& h_bar, const MatrixXd& p_prior,
                                     const MatrixXd& noise_cov) {
    if (h_bar.cols() != p_prior.rows() || noise_cov.rows() != h_bar.rows())
        throw std::invalid_argument("innovation_cov_prior dimension mismatch");
    return symmetrize(h_bar * p_prior * h_bar.transpose() + noise_cov);
}

/// Posterior-linearized innovation covariance in the selected form. The
/// Joseph form is positive semidefinite by construction and is the default
/// everywhere in this library.
inline PosteriorInnovationCov innovation_cov_posterior(
    const MatrixXd& h_hat, const MatrixXd& h_bar, const MatrixXd& p_post,
    const MatrixXd& p_yy_prior, const MatrixXd& gain, const MatrixXd& noise_cov,
    PosteriorCovForm form = PosteriorCovForm::Joseph) {
    PosteriorInnovationCov out;
    out.form_used = form;
    switch (form) {
        case PosteriorCovForm::Direct: {
            const MatrixXd hkr = h_hat * gain * noise_cov;
            out.value = symmetrize(h_hat * p_post * h_hat.transpose() + noise_cov - hkr -
                                   hkr.transpose());
            break;
        }
        case PosteriorCovForm::Inverse: {
            const MatrixXd dh = h_hat - h_bar;
            const MatrixXd r_pyy_inv_rt =
                cholesky_with_jitter(p_yy_prior).solve(noise_cov.transpose()).transpose() *
                noise_cov.transpose();
            out.value = symmetrize(dh * p_post * dh.transpose() + r_pyy_inv_rt);
            break;
        }
        case PosteriorCovForm::Joseph: {
            const MatrixXd dh = h_hat - h_bar;
            const MatrixXd i_hk =
                MatrixXd::Identity(h_bar.rows(), h_bar.rows()) - h_bar * gain;
            out.value = symmetrize(dh * p_post * dh.transpose() +
                                   i_hk * p_yy_prior * i_hk.transpose());
            break;
        }
    }
    return out;
}

/// Traditional weight: ln w- + ln N(y; h(x_prior), P_yy prior). Works with
/// artifacts from any updater (sigma updaters supply the transform mean).
inline double log_weight_traditional(double prior_weight, const UpdateArtifacts& artifacts,
                                     const MeasurementModel& model, const VectorXd& y) {
    const VectorXd res = model.innovation(y, artifacts.predicted_measurement);
    return std::log(prior_weight) +
           log_gaussian_residual_pdf(res, artifacts.prior_innovation_cov);
}

/// Improved weight: relinearize at the posterior mean, form the posterior
/// innovation covariance (Joseph by default), evaluate at h(x_post).
inline double log_weight_improved(double prior_weight, const UpdateArtifacts& artifacts,
                                  const MeasurementModel& model, const VectorXd& y,
                                  PosteriorCovForm form = PosteriorCovForm::Joseph) {
    if (!artifacts.prior_jacobian)
        throw std::invalid_argument("improved density weight requires Jacobian artifacts");
    if (!model.has_jacobian())
        throw std::invalid_argument("improved density weight requires a model Jacobian");
    const MatrixXd h_hat = model.jacobian(artifacts.posterior.mean);
    const PosteriorInnovationCov p_yy_hat = innovation_cov_posterior(
        h_hat, *artifacts.prior_jacobian, artifacts.posterior.covariance,
        artifacts.prior_innovation_cov, artifacts.gain, model.noise_cov, form);
    const VectorXd res = model.innovation(y, model.h(artifacts.posterior.mean));
    return std::log(prior_weight) + log_gaussian_residual_pdf(res, p_yy_hat.value);
}

namespace detail {

inline double log_sum_over_sigma(const SigmaPointSet& sigma,
                                 const std::function<double(Eigen::Index)>& log_term) {
    VectorXd logs(sigma.count());
    for (Eigen::Index l = 0; l < sigma.count(); ++l) {
        const double w = sigma.mean_weights[l];
        if (w < 0.0) throw std::runtime_error("negative UT weight in probabilistic sum");
        logs[l] = (w == 0.0) ? -std::numeric_limits<double>::infinity()
                             : std::log(w) + log_term(l);
    }
    return log_sum_exp(logs);
}

}  // namespace detail

/// Traditional sigma-point weight in one of the three printed variants.
inline double log_weight_traditional_sigma(double prior_weight, const UpdateArtifacts& artifacts,
                                           const MeasurementModel& model, const VectorXd& y,
                                           SigmaWeightVariant variant) {
    if (variant == SigmaWeightVariant::MeanForm)
        return log_weight_traditional(prior_weight, artifacts, model, y);
    if (!artifacts.prior_sigma)
        throw std::invalid_argument("sigma weight scheme requires sigma-point artifacts");
    const SigmaPointSet& sigma = *artifacts.prior_sigma;
    const MatrixXd& cov = (variant == SigmaWeightVariant::MixtureForm)
                              ? artifacts.prior_innovation_cov
                              : model.noise_cov;
    const double lse = detail::log_sum_over_sigma(sigma, [&](Eigen::Index l) {
        const VectorXd res =
            model.innovation(y, model.h(sigma.points[static_cast<std::size_t>(l)]));
        return log_gaussian_residual_pdf(res, cov);
    });
    return std::log(prior_weight) + lse;
}

/// Improved sigma-point weight: importance sampling with points drawn about
/// the posterior; each term is N(chi; x-, P-) N(y; h(chi), R) / N(chi; x+, P+),
/// combined entirely in the log domain.
inline double log_weight_improved_sigma(double prior_weight, const UpdateArtifacts& artifacts,
                                        const MeasurementModel& model, const VectorXd& y,
                                        const UnscentedParams& params) {
    if (!artifacts.prior_sigma)
        throw std::invalid_argument("sigma weight scheme requires sigma-point artifacts");
    const GaussianComponent& prior = artifacts.prior_component;
    const GaussianComponent& post = artifacts.posterior;
    const SigmaPointSet post_sigma =
        unscented_sigma_points(post.mean, post.covariance, params);
    const double lse = detail::log_sum_over_sigma(post_sigma, [&](Eigen::Index l) {
        const VectorXd& chi = post_sigma.points[static_cast<std::size_t>(l)];
        const VectorXd res = model.innovation(y, model.h(chi));
        return log_gaussian_pdf(chi, prior.mean, prior.covariance) +
               log_gaussian_residual_pdf(res, model.noise_cov) -
               log_gaussian_pdf(chi, post.mean, post.covariance);
    });
    return std::log(prior_weight) + lse;
}

/// Unnormalized log weight for one component under the chosen scheme.
inline double log_weight(WeightScheme scheme, double prior_weight,
                         const UpdateArtifacts& artifacts, const MeasurementModel& model,
                         const VectorXd& y, const UpdaterSpec& updater,
                         const WeightOptions& opts = {}) {
    switch (scheme) {
        case WeightScheme::TraditionalDensity:
            return log_weight_traditional(prior_weight, artifacts, model, y);
        case WeightScheme::ImprovedDensity:
            return log_weight_improved(prior_weight, artifacts, model, y, opts.cov_form);
        case WeightScheme::TraditionalSigma:
            return log_weight_traditional_sigma(prior_weight, artifacts, model, y,
                                                opts.sigma_variant);
        case WeightScheme::ImprovedSigma:
            return log_weight_improved_sigma(prior_weight, artifacts, model, y,
                                             updater.effective_ut());
    }
    throw std::logic_error("unreachable weight scheme");
}

/// Full mixture measurement update: every component updated independently
/// by the chosen updater, weights recomputed by the chosen scheme and
/// normalized. Scheme choice never alters the posterior moments.
inline GaussianMixture gmm_measurement_update(const GaussianMixture& mix,
                                              const MeasurementModel& model, const VectorXd& y,
                                              const UpdaterSpec& updater, WeightScheme scheme,
                                              const WeightOptions& opts = {}) {
    if (mix.components.empty()) throw std::runtime_error("empty mixture");
    const Eigen::Index n = static_cast<Eigen::Index>(mix.size());
    std::vector<UpdateArtifacts> artifacts;
    artifacts.reserve(mix.size());
    VectorXd log_weights(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& comp = mix.components[static_cast<std::size_t>(i)];
        artifacts.push_back(apply_updater(comp, model, y, updater));
        log_weights[i] = log_weight(scheme, comp.weight, artifacts.back(), model, y, updater, opts);
    }
    const VectorXd weights = normalize_log_weights(log_weights);
    GaussianMixture out;
    out.components.reserve(mix.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        GaussianComponent c = std::move(artifacts[static_cast<std::size_t>(i)].posterior);
        c.weight = weights[i];
        out.components.push_back(std::move(c));
    }
    return out;
}

}  // namespace gmf
