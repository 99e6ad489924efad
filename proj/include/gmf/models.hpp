#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gmf/measurement_model.hpp"

namespace gmf {

// ---------------------------------------------------------------------------
// Avocado: quadratic per-axis measurement in 2D.
// ---------------------------------------------------------------------------

inline VectorXd avocado_h(const VectorXd& x) {
    VectorXd y(2);
    y << x[0] * x[0], x[1] * x[1];
    return y;
}

inline MatrixXd avocado_jacobian(const VectorXd& x) {
    MatrixXd j = MatrixXd::Zero(2, 2);
    j(0, 0) = 2.0 * x[0];
    j(1, 1) = 2.0 * x[1];
    return j;
}

inline MeasurementModel avocado_model(double noise_std = 0.4) {
    MeasurementModel m;
    m.n_x = 2;
    m.n_y = 2;
    m.h = avocado_h;
    m.jacobian = avocado_jacobian;
    m.noise_cov = noise_std * noise_std * MatrixXd::Identity(2, 2);
    return m;
}

// ---------------------------------------------------------------------------
// Earth-Moon circular restricted three-body problem, barycentric rotating
// frame, nondimensional units.
// ---------------------------------------------------------------------------

struct CR3BPParams {
    double mu;  // scaled Moon gravitational parameter
    double lu;  // length unit [m]
    double tu;  // time unit [s]
};

/// Parameters derived from G and the body masses rather than hard-coded,
/// so the derivation itself is testable.
inline CR3BPParams earth_moon_params() {
    constexpr double g = 6.6743e-11;      // [m^3 s^-2 kg^-1]
    constexpr double m_earth = 5.972e24;  // [kg]
    constexpr double m_moon = 7.342e22;   // [kg]
    constexpr double lu = 384400e3;       // [m]
    const double mu_earth = g * m_earth;
    const double mu_moon = g * m_moon;
    CR3BPParams p;
    p.mu = mu_moon / (mu_earth + mu_moon);
    p.lu = lu;
    p.tu = std::sqrt(lu * lu * lu / (mu_earth + mu_moon));
    return p;
}

namespace detail {

inline void primary_distances(const VectorXd& x, double mu, double& r_earth, double& r_moon) {
    const double r1 = x[0], r2 = x[1], r3 = x[2];
    r_earth = std::sqrt((r1 + mu) * (r1 + mu) + r2 * r2 + r3 * r3);
    r_moon = std::sqrt((r1 - 1.0 + mu) * (r1 - 1.0 + mu) + r2 * r2 + r3 * r3);
    if (r_earth < 1e-9 || r_moon < 1e-9)
        throw std::runtime_error("singular primary distance");
}

}  // namespace detail

/// State derivative of [r1 r2 r3 v1 v2 v3] in the rotating frame.
inline VectorXd cr3bp_derivative(const VectorXd& x, const CR3BPParams& params) {
    if (x.size() != 6) throw std::invalid_argument("CR3BP state must be 6D");
    const double mu = params.mu;
    double re, rm;
    detail::primary_distances(x, mu, re, rm);
    const double re3 = re * re * re;
    const double rm3 = rm * rm * rm;
    const double r1 = x[0], r2 = x[1], r3 = x[2];
    const double v1 = x[3], v2 = x[4], v3 = x[5];
    VectorXd d(6);
    d[0] = v1;
    d[1] = v2;
    d[2] = v3;
    d[3] = r1 + 2.0 * v2 - (1.0 - mu) * (r1 + mu) / re3 - mu * (r1 - 1.0 + mu) / rm3;
    d[4] = r2 - 2.0 * v1 - (1.0 - mu) * r2 / re3 - mu * r2 / rm3;
    d[5] = -(1.0 - mu) * r3 / re3 - mu * r3 / rm3;
    return d;
}

/// Jacobi integral C = r1^2 + r2^2 + 2(1-mu)/r_e + 2 mu/r_m - |v|^2;
/// conserved along trajectories, used as an integration-accuracy oracle.
inline double jacobi_constant(const VectorXd& x, const CR3BPParams& params) {
    if (x.size() != 6) throw std::invalid_argument("CR3BP state must be 6D");
    double re, rm;
    detail::primary_distances(x, params.mu, re, rm);
    const double v_sq = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
    return x[0] * x[0] + x[1] * x[1] + 2.0 * (1.0 - params.mu) / re +
           2.0 * params.mu / rm - v_sq;
}

// ---------------------------------------------------------------------------
// Right ascension / declination from a fixed sensor.
// ---------------------------------------------------------------------------

inline constexpr double arcsec_to_rad(double arcsec) {
    return arcsec * M_PI / (180.0 * 3600.0);
}

struct GroundSensor {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // scaled, barycentric
    double noise_std;                                     // [rad], both angles

    explicit GroundSensor(double noise_std_rad = arcsec_to_rad(16.1))
        : noise_std(noise_std_rad) {
        if (!(noise_std > 0.0)) throw std::invalid_argument("sensor noise std must be positive");
    }
};

/// Wrap an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

inline VectorXd radec_h(const VectorXd& x, const GroundSensor& sensor) {
    const Eigen::Vector3d d = x.head<3>() - sensor.position;
    const double range = d.norm();
    if (!(range > 0.0)) throw std::runtime_error("target at sensor");
    const double rho_sq = d[0] * d[0] + d[1] * d[1];
    if (rho_sq <= 0.0) throw std::runtime_error("declination singularity");
    VectorXd y(2);
    y[0] = std::atan2(d[1], d[0]);
    y[1] = std::asin(d[2] / range);
    return y;
}

inline MatrixXd radec_jacobian(const VectorXd& x, const GroundSensor& sensor) {
    const Eigen::Vector3d d = x.head<3>() - sensor.position;
    const double rho_sq = d[0] * d[0] + d[1] * d[1];
    const double r_sq = rho_sq + d[2] * d[2];
    if (!(r_sq > 0.0)) throw std::runtime_error("target at sensor");
    if (rho_sq <= 0.0) throw std::runtime_error("declination singularity");
    const double rho = std::sqrt(rho_sq);
    MatrixXd j = MatrixXd::Zero(2, x.size());
    j(0, 0) = -d[1] / rho_sq;
    j(0, 1) = d[0] / rho_sq;
    j(1, 0) = -d[0] * d[2] / (rho * r_sq);
    j(1, 1) = -d[1] * d[2] / (rho * r_sq);
    j(1, 2) = rho / r_sq;
    return j;
}

/// RA/Dec model over the 6D CR3BP state. Right-ascension innovations are
/// wrapped into (-pi, pi] before any gain or weight computation; declination
/// differences are used raw.
inline MeasurementModel radec_model(const GroundSensor& sensor, Eigen::Index n_x = 6) {
    MeasurementModel m;
    m.n_x = n_x;
    m.n_y = 2;
    m.noise_cov = sensor.noise_std * sensor.noise_std * MatrixXd::Identity(2, 2);
    m.h = [sensor](const VectorXd& x) { return radec_h(x, sensor); };
    m.jacobian = [sensor](const VectorXd& x) { return radec_jacobian(x, sensor); };
    m.residual = [](const VectorXd& y, const VectorXd& predicted) {
        VectorXd r = y - predicted;
        r[0] = wrap_angle(r[0]);
        return r;
    };
    return m;
}

// NRHO scenario constants.
inline VectorXd nrho_initial_state() {
    VectorXd x0(6);
    x0 << 1.0110350588, 0.0, -0.1731500000, 0.0, -0.0780141199, 0.0;
    return x0;
}

inline MatrixXd nrho_initial_covariance() {
    VectorXd sd(6);
    sd << 2.5e-5, 2.5e-5, 2.5e-5, 1e-6, 1e-6, 1e-6;
    return sd.array().square().matrix().asDiagonal();
}

inline constexpr double kNrhoPeriod = 1.3632096570;

}  // namespace gmf
