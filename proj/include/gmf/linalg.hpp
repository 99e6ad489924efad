#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <cmath>

namespace gmf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }
inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

/// Replace a covariance by its symmetric part (P + P^T)/2.
inline MatrixXd symmetrize(const MatrixXd& p) { return 0.5 * (p + p.transpose()); }

/// Cholesky factor of a symmetric PSD matrix with a single bounded repair:
/// if the factorization fails, add 1e-12 * trace(P)/n to the diagonal and
/// retry once. A second failure throws "singular covariance".
inline Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& cov) {
    if (!all_finite(cov)) throw std::runtime_error("non-finite input");
    const MatrixXd sym = symmetrize(cov);
    Eigen::LLT<MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt;
    const double n = static_cast<double>(sym.rows());
    const double jitter = 1e-12 * sym.trace() / n;
    MatrixXd repaired = sym;
    repaired.diagonal().array() += jitter;
    llt.compute(repaired);
    if (llt.info() != Eigen::Success) throw std::runtime_error("singular covariance");
    return llt;
}

/// Lower-triangular square root used for sigma points and sampling.
inline MatrixXd cholesky_lower(const MatrixXd& cov) {
    return cholesky_with_jitter(cov).matrixL();
}

/// Log-determinant from a Cholesky factor.
inline double log_det_from_llt(const Eigen::LLT<MatrixXd>& llt) {
    return 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

/// Solve cov * x = b through the jittered factorization.
inline VectorXd spd_solve(const MatrixXd& cov, const VectorXd& b) {
    return cholesky_with_jitter(cov).solve(b);
}

inline MatrixXd spd_solve(const MatrixXd& cov, const MatrixXd& b) {
    return cholesky_with_jitter(cov).solve(b);
}

}  // namespace gmf
