#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gmf/gaussian.hpp"
#include "gmf/measurement_model.hpp"
#include "gmf/propagation.hpp"
#include "gmf/random.hpp"
#include "gmf/updaters.hpp"
#include "gmf/weights.hpp"

namespace gmf {

/// Particle cloud carrying the EnGMF state between updates.
struct Ensemble {
    std::vector<VectorXd> members;
    std::uint64_t rng_seed = 0;  // reproducibility lineage

    Eigen::Index dimension() const {
        return members.empty() ? 0 : members.front().size();
    }
    Eigen::Index size() const { return static_cast<Eigen::Index>(members.size()); }

    void require_valid() const {
        const Eigen::Index n = dimension();
        if (size() < n + 2)
            throw std::invalid_argument("ensemble needs at least n_x + 2 members");
    }

    VectorXd sample_mean() const {
        VectorXd m = VectorXd::Zero(dimension());
        for (const auto& x : members) m += x;
        return m / static_cast<double>(size());
    }

    /// Unbiased sample covariance.
    MatrixXd sample_covariance() const {
        const VectorXd m = sample_mean();
        MatrixXd c = MatrixXd::Zero(dimension(), dimension());
        for (const auto& x : members) {
            const VectorXd d = x - m;
            c += d * d.transpose();
        }
        return symmetrize(c / static_cast<double>(size() - 1));
    }
};

/// Silverman rule-of-thumb kernel scaling
/// beta^2 = (4/(n_x+2))^(2/(n_x+4)) * M^(-2/(n_x+4)).
inline double silverman_bandwidth(Eigen::Index n_x, Eigen::Index ensemble_size) {
    if (ensemble_size < 1) throw std::invalid_argument("ensemble size must be positive");
    const double n = static_cast<double>(n_x);
    const double m = static_cast<double>(ensemble_size);
    const double e = 2.0 / (n + 4.0);
    return std::pow(4.0 / (n + 2.0), e) * std::pow(m, -e);
}

/// Kernel density mixture over the members: uniform weights, means at the
/// members, shared covariance bandwidth_scale * beta^2 * sample covariance.
/// The kernel adds variance on top of the member spread, so the represented
/// mixture is mildly inflated each assimilation cycle; the scale knob trades
/// that conservatism against weight-collapse impoverishment. `shrink_means`
/// selects the variance-preserving placement (members pulled toward the
/// ensemble mean) instead.
inline GaussianMixture ensemble_to_mixture(const Ensemble& ens, double bandwidth_scale = 1.0,
                                           bool shrink_means = false) {
    ens.require_valid();
    const double beta_sq =
        bandwidth_scale * silverman_bandwidth(ens.dimension(), ens.size());
    const MatrixXd kernel = beta_sq * ens.sample_covariance();
    // surfaces "singular covariance" for degenerate ensembles
    (void)cholesky_with_jitter(kernel);
    GaussianMixture mix;
    mix.components.reserve(ens.members.size());
    const double w = 1.0 / static_cast<double>(ens.size());
    const double shrink = shrink_means ? std::sqrt(1.0 - std::min(beta_sq, 1.0)) : 1.0;
    const VectorXd mean = ens.sample_mean();
    for (const auto& x : ens.members)
        mix.components.push_back({w, mean + shrink * (x - mean), kernel});
    return mix;
}

/// Posterior mixture -> ensemble: systematic selection of component indices
/// over a deterministic stream, then a Gaussian draw per member. Per-member
/// draw streams are derived from (seed, member) so parallel execution order
/// cannot change the result.
inline Ensemble resample_mixture(const GaussianMixture& mix, Eigen::Index size,
                                 std::uint64_t seed) {
    if (mix.components.empty()) throw std::runtime_error("empty mixture");
    const Eigen::Index n_comp = static_cast<Eigen::Index>(mix.size());

    // cumulative weights
    std::vector<double> cdf(static_cast<std::size_t>(n_comp));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_comp; ++i) {
        acc += mix.components[static_cast<std::size_t>(i)].weight;
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    if (!(acc > 0.0)) throw std::runtime_error("degenerate weights");

    // shared Cholesky factors (components may share covariance objects but
    // factor each defensively once)
    std::vector<MatrixXd> factors(static_cast<std::size_t>(n_comp));
    for (Eigen::Index i = 0; i < n_comp; ++i)
        factors[static_cast<std::size_t>(i)] =
            cholesky_lower(mix.components[static_cast<std::size_t>(i)].covariance);

    RandomStream offset_stream(seed, {0xa11ce5u});
    const double offset = offset_stream.uniform();

    Ensemble out;
    out.rng_seed = seed;
    out.members.reserve(static_cast<std::size_t>(size));
    Eigen::Index comp = 0;
    for (Eigen::Index l = 0; l < size; ++l) {
        const double u = acc * (static_cast<double>(l) + offset) / static_cast<double>(size);
        while (comp + 1 < n_comp && cdf[static_cast<std::size_t>(comp)] < u) ++comp;
        const auto& c = mix.components[static_cast<std::size_t>(comp)];
        RandomStream member_stream(seed, {0xd4a3u, static_cast<std::uint64_t>(l)});
        out.members.push_back(
            member_stream.gaussian(c.mean, factors[static_cast<std::size_t>(comp)]));
    }
    return out;
}

/// One measurement epoch in an EnGMF run.
struct EngmfSnapshot {
    double time = 0.0;
    VectorXd prior_mean;
    VectorXd posterior_mean;
    MatrixXd posterior_cov;
};

struct EngmfConfig {
    UpdaterSpec updater = UpdaterSpec::ekf();
    WeightScheme scheme = WeightScheme::TraditionalDensity;
    WeightOptions weight_options = {};
    IntegratorConfig integrator = {};
    std::uint64_t seed = 0;
    double bandwidth_scale = 1.0;
    bool shrink_kernel_means = false;
    // multiplicative spread inflation applied to the resampled ensemble;
    // the stabilizer pairs with shrink_kernel_means
    double post_resample_inflation = 1.0;
};

/// Propagate-update-resample cycle over a list of measurement epochs.
/// `measurements[k]` is the observation at `epochs[k]`; epochs must be
/// nondecreasing and start at or after t0.
inline std::pair<Ensemble, std::vector<EngmfSnapshot>> engmf_step(
    const Ensemble& initial, const DerivativeFn& dynamics, double t0,
    const std::vector<double>& epochs, const MeasurementModel& model,
    const std::vector<VectorXd>& measurements, const EngmfConfig& cfg) {
    if (epochs.size() != measurements.size())
        throw std::invalid_argument("epochs and measurements must align");
    initial.require_valid();

    Ensemble ens = initial;
    ens.rng_seed = cfg.seed;
    std::vector<EngmfSnapshot> snapshots;
    snapshots.reserve(epochs.size());

    double t = t0;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const double epoch = epochs[k];
        if (epoch < t) throw std::invalid_argument("epochs must be nondecreasing");
        try {
            if (epoch > t)
                for (auto& x : ens.members) x = propagate(x, t, epoch, dynamics, cfg.integrator);
            t = epoch;

            GaussianMixture prior =
                ensemble_to_mixture(ens, cfg.bandwidth_scale, cfg.shrink_kernel_means);
            GaussianMixture posterior = gmm_measurement_update(
                prior, model, measurements[k], cfg.updater, cfg.scheme, cfg.weight_options);

            EngmfSnapshot snap;
            snap.time = epoch;
            snap.prior_mean = ens.sample_mean();
            auto [mean, cov] = mixture_moments(posterior);
            snap.posterior_mean = std::move(mean);
            snap.posterior_cov = std::move(cov);
            snapshots.push_back(std::move(snap));

            ens = resample_mixture(posterior, ens.size(),
                                   rng::derive(cfg.seed, {0x5e5a'0001u, static_cast<std::uint64_t>(k)}));
            if (cfg.post_resample_inflation != 1.0) {
                const VectorXd center = ens.sample_mean();
                for (auto& x : ens.members)
                    x = center + cfg.post_resample_inflation * (x - center);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("engmf_step failed at epoch index " + std::to_string(k) +
                                     ": " + e.what());
        }
    }
    return {std::move(ens), std::move(snapshots)};
}

}  // namespace gmf
