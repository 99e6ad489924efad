#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmf/models.hpp"
#include "gmf/updaters.hpp"
#include "test_helpers.hpp"

using namespace gmf;
using gmf::test::random_spd_conditioned;
using gmf::test::rel_err;
using Catch::Matchers::ContainsSubstring;

namespace {

struct LinearInstance {
    MeasurementModel model;
    GaussianComponent comp;
    VectorXd y;
};

LinearInstance random_linear_instance(RandomStream& rng, Eigen::Index n_x, Eigen::Index n_y) {
    MatrixXd h(n_y, n_x);
    for (Eigen::Index i = 0; i < n_y; ++i)
        for (Eigen::Index j = 0; j < n_x; ++j) h(i, j) = rng.normal();
    LinearInstance inst{make_linear_model(h, random_spd_conditioned(rng, n_y, 0.1, 10.0)),
                        {1.0, rng.normal_vector(n_x), random_spd_conditioned(rng, n_x, 0.1, 10.0)},
                        VectorXd()};
    inst.y = h * inst.comp.mean + rng.normal_vector(n_y);
    return inst;
}

// information-form Kalman oracle: P+^-1 = P-^-1 + H^T R^-1 H
std::pair<VectorXd, MatrixXd> information_filter_oracle(const LinearInstance& inst) {
    const MatrixXd h = inst.model.jacobian(inst.comp.mean);
    const MatrixXd r_inv = inst.model.noise_cov.inverse();
    const MatrixXd info = inst.comp.covariance.inverse() + h.transpose() * r_inv * h;
    const MatrixXd p_post = info.inverse();
    const VectorXd x_post =
        p_post * (inst.comp.covariance.inverse() * inst.comp.mean + h.transpose() * r_inv * inst.y);
    return {x_post, p_post};
}

}  // namespace

TEST_CASE("ekf_update matches the information-filter oracle on linear models") {
    RandomStream rng(101);
    for (int k = 0; k < 50; ++k) {
        const Eigen::Index n_x = 1 + static_cast<Eigen::Index>(rng.next_u64() % 5);
        const Eigen::Index n_y = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
        const LinearInstance inst = random_linear_instance(rng, n_x, n_y);
        const UpdateArtifacts art = ekf_update(inst.comp, inst.model, inst.y);
        const auto [x_want, p_want] = information_filter_oracle(inst);
        CHECK(rel_err(art.posterior.mean, x_want) < 1e-9);
        CHECK(rel_err(art.posterior.covariance, p_want) < 1e-9);
    }
}

TEST_CASE("ekf_update with uninformative measurement leaves the prior") {
    RandomStream rng(103);
    LinearInstance inst = random_linear_instance(rng, 3, 2);
    inst.model.noise_cov *= 1e12;
    const UpdateArtifacts art = ekf_update(inst.comp, inst.model, inst.y);
    CHECK(rel_err(art.posterior.mean, inst.comp.mean) < 1e-6);
    CHECK(rel_err(art.posterior.covariance, inst.comp.covariance) < 1e-6);
}

TEST_CASE("ekf_update populates Avocado artifacts") {
    const MeasurementModel model = avocado_model();
    VectorXd mean(2);
    mean << -3.5, 0.0;
    GaussianComponent comp{1.0, mean, MatrixXd::Identity(2, 2)};
    const UpdateArtifacts art = ekf_update(comp, model, VectorXd::Zero(2));
    REQUIRE(art.prior_jacobian.has_value());
    MatrixXd h_want(2, 2);
    h_want << -7.0, 0.0, 0.0, 0.0;
    CHECK((*art.prior_jacobian - h_want).norm() == 0.0);
    CHECK(art.predicted_measurement[0] == Catch::Approx(12.25));
    CHECK(art.prior_component.mean == mean);
}

TEST_CASE("bruf_update degenerates to the EKF at N=1") {
    RandomStream rng(107);
    const LinearInstance inst = random_linear_instance(rng, 4, 2);
    const UpdateArtifacts a = ekf_update(inst.comp, inst.model, inst.y);
    const UpdateArtifacts b = bruf_update(inst.comp, inst.model, inst.y, 1);
    CHECK((a.posterior.mean - b.posterior.mean).norm() == 0.0);
    CHECK((a.posterior.covariance - b.posterior.covariance).norm() == 0.0);
    CHECK((a.gain - b.gain).norm() == 0.0);
}

TEST_CASE("bruf_update equals the single EKF update for linear models") {
    RandomStream rng(109);
    for (int n : {2, 5, 10, 20}) {
        const LinearInstance inst = random_linear_instance(rng, 3, 2);
        const UpdateArtifacts a = ekf_update(inst.comp, inst.model, inst.y);
        const UpdateArtifacts b = bruf_update(inst.comp, inst.model, inst.y, n);
        CHECK(rel_err(b.posterior.mean, a.posterior.mean) < 1e-8);
        CHECK(rel_err(b.posterior.covariance, a.posterior.covariance) < 1e-8);
    }
}

TEST_CASE("bruf_update contracts the Avocado component") {
    const MeasurementModel model = avocado_model();
    VectorXd mean(2);
    mean << -2.0, 0.5;
    MatrixXd prior_cov(2, 2);
    prior_cov << 1.0, -0.5, -0.5, 1.0;
    GaussianComponent comp{1.0, mean, prior_cov};
    const UpdateArtifacts art = bruf_update(comp, model, VectorXd::Zero(2), 10);
    CHECK(gmf::test::psd_within_tolerance(art.posterior.covariance));
    CHECK(art.posterior.covariance.trace() < prior_cov.trace());
    // artifacts evaluated at the original prior
    CHECK((*art.prior_jacobian - avocado_jacobian(mean)).norm() == 0.0);
    CHECK((art.predicted_measurement - avocado_h(mean)).norm() == 0.0);
}

TEST_CASE("unscented sigma points reproduce the hand-computed weights") {
    const UnscentedParams params{1.0, 2.0, 3.0};
    VectorXd mean(2);
    mean << 1.0, -2.0;
    RandomStream rng(113);
    const MatrixXd cov = random_spd_conditioned(rng, 2, 0.5, 2.0);
    const SigmaPointSet set = unscented_sigma_points(mean, cov, params);
    REQUIRE(set.count() == 5);
    CHECK(set.mean_weights[0] == Catch::Approx(0.6).epsilon(1e-14));
    CHECK(set.cov_weights[0] == Catch::Approx(2.6).epsilon(1e-14));
    for (int i = 1; i < 5; ++i) CHECK(set.mean_weights[i] == Catch::Approx(0.1).epsilon(1e-14));
    CHECK(std::abs(set.mean_weights.sum() - 1.0) < 1e-12);
    CHECK((set.weighted_mean() - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("CKF parameters give a zero-weight center point at +/- sqrt(n P)") {
    const UnscentedParams params = ckf_params();
    VectorXd mean = VectorXd::Zero(2);
    MatrixXd cov(2, 2);
    cov << 4.0, 0.0, 0.0, 9.0;
    const SigmaPointSet set = unscented_sigma_points(mean, cov, params);
    CHECK(set.mean_weights[0] == 0.0);
    // columns of sqrt(2 * diag(4, 9)) = diag(2 sqrt 2, 3 sqrt 2)
    CHECK(set.points[1][0] == Catch::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(set.points[3][1] == Catch::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("sigma point moment reconstruction holds under fuzz") {
    RandomStream rng(127);
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        const VectorXd mean = 3.0 * rng.normal_vector(n);
        const MatrixXd cov = random_spd_conditioned(rng, n, 1e-3, 1e3);
        const UnscentedParams params =
            (k % 2 == 0) ? ukf_params() : ckf_params();
        const SigmaPointSet set = unscented_sigma_points(mean, cov, params);
        CHECK(std::abs(set.mean_weights.sum() - 1.0) < 1e-12);
        CHECK((set.weighted_mean() - mean).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + mean.norm()));
        CHECK(rel_err(set.weighted_covariance(mean), cov) < 1e-8);
    }
}

TEST_CASE("invalid unscented scaling is rejected") {
    UnscentedParams params{0.1, 2.0, -3.0};  // lambda = 0.01*(2-3) - 2 < -n_x
    CHECK_THROWS_WITH(unscented_sigma_points(VectorXd::Zero(2), MatrixXd::Identity(2, 2), params),
                      ContainsSubstring("invalid unscented scaling"));
}

TEST_CASE("sigma_update matches the Kalman oracle on linear models") {
    RandomStream rng(131);
    for (int k = 0; k < 30; ++k) {
        const LinearInstance inst = random_linear_instance(rng, 3, 2);
        const UpdateArtifacts kalman = ekf_update(inst.comp, inst.model, inst.y);
        const UpdateArtifacts sig = sigma_update(inst.comp, inst.model, inst.y, ckf_params());
        CHECK(rel_err(sig.posterior.mean, kalman.posterior.mean) < 1e-8);
        CHECK(rel_err(sig.posterior.covariance, kalman.posterior.covariance) < 1e-8);
        CHECK(!sig.prior_jacobian.has_value());
        REQUIRE(sig.prior_sigma.has_value());
    }
}

TEST_CASE("sigma_update with zero innovation keeps the mean") {
    RandomStream rng(137);
    GaussianComponent comp{1.0, rng.normal_vector(2), random_spd_conditioned(rng, 2, 0.5, 2.0)};
    const MeasurementModel model = avocado_model();
    // predicted measurement from the transform itself
    const UpdateArtifacts probe = sigma_update(comp, model, VectorXd::Zero(2), ukf_params());
    const UpdateArtifacts art = sigma_update(comp, model, probe.predicted_measurement, ukf_params());
    CHECK((art.posterior.mean - comp.mean).norm() == 0.0);
}

TEST_CASE("sigma_update innovation covariance carries UT corrections on the Avocado") {
    VectorXd mean(2);
    mean << -3.5, 0.0;
    MatrixXd cov(2, 2);
    cov << 1.0, -0.5, -0.5, 1.0;
    GaussianComponent comp{1.0, mean, cov};
    const MeasurementModel model = avocado_model();
    const UpdateArtifacts ekf = ekf_update(comp, model, VectorXd::Zero(2));
    const UpdateArtifacts sig = sigma_update(comp, model, VectorXd::Zero(2), ukf_params());
    CHECK((sig.prior_innovation_cov - ekf.prior_innovation_cov).norm() > 0.0);
}

TEST_CASE("every updater returns symmetric PSD posteriors under fuzz") {
    RandomStream rng(139);
    const MeasurementModel quad = avocado_model();
    for (int k = 0; k < 1000; ++k) {
        GaussianComponent comp{1.0, 2.0 * rng.normal_vector(2),
                               random_spd_conditioned(rng, 2, 1e-2, 1e2)};
        const VectorXd y = rng.normal_vector(2);
        UpdateArtifacts art;
        switch (k % 4) {
            case 0: art = ekf_update(comp, quad, y); break;
            case 1: art = bruf_update(comp, quad, y, 1 + static_cast<int>(rng.next_u64() % 10)); break;
            case 2: art = sigma_update(comp, quad, y, ukf_params()); break;
            default: art = sigma_update(comp, quad, y, ckf_params()); break;
        }
        const MatrixXd& p = art.posterior.covariance;
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(gmf::test::psd_within_tolerance(p));
    }
}

TEST_CASE("linear models give identical posterior means across updaters") {
    RandomStream rng(149);
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n_x = 1 + static_cast<Eigen::Index>(rng.next_u64() % 4);
        const Eigen::Index n_y = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
        const LinearInstance inst = random_linear_instance(rng, n_x, n_y);
        const int bruf_n = 1 + static_cast<int>(rng.next_u64() % 20);
        const VectorXd m0 = ekf_update(inst.comp, inst.model, inst.y).posterior.mean;
        const VectorXd m1 = bruf_update(inst.comp, inst.model, inst.y, bruf_n).posterior.mean;
        const VectorXd m2 = sigma_update(inst.comp, inst.model, inst.y, ukf_params()).posterior.mean;
        const VectorXd m3 = sigma_update(inst.comp, inst.model, inst.y, ckf_params()).posterior.mean;
        CHECK(rel_err(m1, m0) < 1e-7);
        CHECK(rel_err(m2, m0) < 1e-7);
        CHECK(rel_err(m3, m0) < 1e-7);
    }
}
