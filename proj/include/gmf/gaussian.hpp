#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gmf/linalg.hpp"

namespace gmf {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// One weighted Gaussian: the atom of every mixture in this library.
struct GaussianComponent {
    double weight = 1.0;
    VectorXd mean;
    MatrixXd covariance;

    GaussianComponent() = default;
    GaussianComponent(double w, VectorXd mu, MatrixXd cov)
        : weight(w), mean(std::move(mu)), covariance(std::move(cov)) {
        validate();
    }

    Eigen::Index dimension() const { return mean.size(); }

    void validate() const {
        if (weight < 0.0 || !std::isfinite(weight))
            throw std::invalid_argument("component weight must be non-negative");
        if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
            throw std::invalid_argument("mean/covariance dimension mismatch");
        const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
        if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("covariance not symmetric");
    }
};

/// Ordered collection of components over a common state dimension.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    GaussianMixture() = default;
    explicit GaussianMixture(std::vector<GaussianComponent> comps)
        : components(std::move(comps)) {
        if (!components.empty()) {
            const Eigen::Index n = components.front().dimension();
            for (const auto& c : components)
                if (c.dimension() != n)
                    throw std::invalid_argument("mixture components have unequal dimensions");
        }
    }

    Eigen::Index dimension() const {
        return components.empty() ? 0 : components.front().dimension();
    }
    std::size_t size() const { return components.size(); }

    /// Rescale weights to sum to one.
    void normalize() {
        double total = 0.0;
        for (const auto& c : components) total += c.weight;
        if (!(total > 0.0) || !std::isfinite(total))
            throw std::runtime_error("degenerate weights");
        for (auto& c : components) c.weight /= total;
    }

    VectorXd weights() const {
        VectorXd w(static_cast<Eigen::Index>(components.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w[i] = components[static_cast<std::size_t>(i)].weight;
        return w;
    }
};

/// ln N(residual; 0, cov). All densities in the library funnel through here
/// so the log domain is never left while accumulating.
inline double log_gaussian_residual_pdf(const VectorXd& residual, const MatrixXd& cov) {
    if (!all_finite(residual) || !all_finite(cov))
        throw std::runtime_error("non-finite input");
    const auto llt = cholesky_with_jitter(cov);
    const VectorXd whitened = llt.matrixL().solve(residual);
    const double n = static_cast<double>(residual.size());
    return -0.5 * (n * kLogTwoPi + log_det_from_llt(llt) + whitened.squaredNorm());
}

/// ln N(x; mean, cov) via triangular factorization; intermediate quantities
/// are never exponentiated.
inline double log_gaussian_pdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
    if (x.size() != mean.size() || cov.rows() != x.size())
        throw std::invalid_argument("log_gaussian_pdf dimension mismatch");
    if (!all_finite(x) || !all_finite(mean))
        throw std::runtime_error("non-finite input");
    return log_gaussian_residual_pdf(x - mean, cov);
}

/// Max-shift log-sum-exp over finite entries; -inf entries contribute zero.
inline double log_sum_exp(const VectorXd& logs) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logs.size(); ++i) m = std::max(m, logs[i]);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < logs.size(); ++i) acc += std::exp(logs[i] - m);
    return m + std::log(acc);
}

/// Exp-normalize log weights into probabilities summing to one.
/// All entries at -inf signal a total likelihood collapse.
inline VectorXd normalize_log_weights(const VectorXd& log_weights) {
    if (log_weights.size() == 0) throw std::runtime_error("degenerate weights");
    for (Eigen::Index i = 0; i < log_weights.size(); ++i) {
        const double v = log_weights[i];
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw std::runtime_error("non-finite input");
    }
    const double lse = log_sum_exp(log_weights);
    if (!std::isfinite(lse)) throw std::runtime_error("degenerate weights");
    VectorXd w(log_weights.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - lse);
    w /= w.sum();
    return w;
}

/// Moment matching: mixture mean and covariance (law of total variance).
inline std::pair<VectorXd, MatrixXd> mixture_moments(const GaussianMixture& mix) {
    if (mix.components.empty()) throw std::runtime_error("empty mixture");
    const Eigen::Index n = mix.dimension();
    VectorXd mean = VectorXd::Zero(n);
    for (const auto& c : mix.components) mean += c.weight * c.mean;
    MatrixXd cov = MatrixXd::Zero(n, n);
    for (const auto& c : mix.components) {
        const VectorXd d = c.mean - mean;
        cov += c.weight * (c.covariance + d * d.transpose());
    }
    return {mean, symmetrize(cov)};
}

/// Two-dimensional density sample field over a tensor grid.
struct GridField {
    VectorXd axis_x;  // strictly increasing
    VectorXd axis_y;
    MatrixXd values;  // values(i, j) at (axis_x[i], axis_y[j])

    GridField() = default;
    GridField(VectorXd ax, VectorXd ay)
        : axis_x(std::move(ax)), axis_y(std::move(ay)),
          values(MatrixXd::Zero(axis_x.size(), axis_y.size())) {
        for (Eigen::Index i = 1; i < axis_x.size(); ++i)
            if (!(axis_x[i] > axis_x[i - 1]))
                throw std::invalid_argument("grid axis not strictly increasing");
        for (Eigen::Index i = 1; i < axis_y.size(); ++i)
            if (!(axis_y[i] > axis_y[i - 1]))
                throw std::invalid_argument("grid axis not strictly increasing");
    }

    bool same_grid(const GridField& other) const {
        return axis_x.size() == other.axis_x.size() && axis_y.size() == other.axis_y.size() &&
               axis_x == other.axis_x && axis_y == other.axis_y;
    }

    /// Trapezoid quadrature weights along one axis.
    static VectorXd trapezoid_weights(const VectorXd& axis) {
        const Eigen::Index n = axis.size();
        VectorXd w = VectorXd::Zero(n);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double h = axis[i + 1] - axis[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        return w;
    }

    double trapezoid_mass() const {
        const VectorXd wx = trapezoid_weights(axis_x);
        const VectorXd wy = trapezoid_weights(axis_y);
        return wx.dot(values * wy);
    }
};

/// Evaluate the mixture density at every grid node (2D mixtures only).
inline GridField mixture_pdf_on_grid(const GaussianMixture& mix, const VectorXd& axis_x,
                                     const VectorXd& axis_y) {
    if (mix.dimension() != 2)
        throw std::runtime_error("grid evaluation supports 2D only");
    GridField field(axis_x, axis_y);
    for (const auto& c : mix.components) {
        const auto llt = cholesky_with_jitter(c.covariance);
        const MatrixXd l = llt.matrixL();
        const double log_norm = -0.5 * (2.0 * kLogTwoPi + log_det_from_llt(llt));
        const double l00 = l(0, 0), l10 = l(1, 0), l11 = l(1, 1);
        for (Eigen::Index i = 0; i < axis_x.size(); ++i) {
            const double dx = axis_x[i] - c.mean[0];
            const double u = dx / l00;
            for (Eigen::Index j = 0; j < axis_y.size(); ++j) {
                const double dy = axis_y[j] - c.mean[1];
                const double v = (dy - l10 * u) / l11;
                field.values(i, j) += c.weight * std::exp(log_norm - 0.5 * (u * u + v * v));
            }
        }
    }
    if (!all_finite(field.values)) throw std::runtime_error("non-finite input");
    return field;
}

}  // namespace gmf
