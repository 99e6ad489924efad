#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmf/engmf.hpp"
#include "gmf/metrics.hpp"
#include "test_helpers.hpp"

using namespace gmf;
using gmf::test::random_spd_conditioned;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("silverman bandwidth closed forms") {
    CHECK(silverman_bandwidth(1, 1) == Catch::Approx(std::pow(4.0 / 3.0, 0.4)).epsilon(1e-12));
    CHECK(silverman_bandwidth(1, 1) == Catch::Approx(1.122).margin(5e-4));
    CHECK(silverman_bandwidth(6, 100) == Catch::Approx(0.3466).margin(5e-5));
    // monotone in the ensemble size
    for (Eigen::Index n : {1, 2, 6}) {
        for (Eigen::Index m : {4, 16, 64, 256})
            CHECK(silverman_bandwidth(n, 2 * m) < silverman_bandwidth(n, m));
    }
}

TEST_CASE("ensemble_to_mixture") {
    RandomStream rng(401);
    SECTION("identical members are degenerate") {
        Ensemble ens;
        const VectorXd x = VectorXd::Constant(2, 1.5);  // exactly representable mean
        for (int i = 0; i < 8; ++i) ens.members.push_back(x);
        CHECK_THROWS_WITH(ensemble_to_mixture(ens), ContainsSubstring("singular covariance"));
    }
    SECTION("uniform weights, mean preserved, total-variance identities") {
        Ensemble ens;
        const MatrixXd l = cholesky_lower(random_spd_conditioned(rng, 3, 0.5, 2.0));
        for (int i = 0; i < 40; ++i) ens.members.push_back(rng.gaussian(VectorXd::Zero(3), l));
        const double beta_sq = silverman_bandwidth(3, 40);
        const MatrixXd chat = ens.sample_covariance();
        const double spread = static_cast<double>(40 - 1) / 40.0;  // biased spread factor

        // raw kernel placement: mixture covariance = (1 + beta^2) Chat
        const GaussianMixture raw = ensemble_to_mixture(ens);
        REQUIRE(raw.size() == 40);
        for (const auto& c : raw.components)
            CHECK(c.weight == Catch::Approx(1.0 / 40.0).epsilon(1e-15));
        {
            const auto [mean, cov] = mixture_moments(raw);
            CHECK((mean - ens.sample_mean()).cwiseAbs().maxCoeff() < 1e-14);
            const MatrixXd want = beta_sq * chat + spread * chat;
            CHECK(gmf::test::rel_err(cov, want) < 1e-10);
        }
        // shrunk placement: variance no longer inflated
        {
            const auto [mean, cov] = mixture_moments(ensemble_to_mixture(ens, 1.0, true));
            CHECK((mean - ens.sample_mean()).cwiseAbs().maxCoeff() < 1e-14);
            const MatrixXd want = beta_sq * chat + (1.0 - beta_sq) * spread * chat;
            CHECK(gmf::test::rel_err(cov, want) < 1e-10);
        }
    }
    SECTION("too-small ensembles are rejected") {
        Ensemble ens;
        for (int i = 0; i < 3; ++i) ens.members.push_back(rng.normal_vector(3));
        CHECK_THROWS(ensemble_to_mixture(ens));
    }
}

TEST_CASE("resample_mixture") {
    RandomStream rng(409);
    SECTION("single-component standard normal sampling statistics") {
        GaussianMixture mix({{1.0, VectorXd::Zero(2), MatrixXd::Identity(2, 2)}});
        const Ensemble ens = resample_mixture(mix, 100000, 7);
        const VectorXd m = ens.sample_mean();
        const MatrixXd c = ens.sample_covariance();
        const double se_mean = 1.0 / std::sqrt(100000.0);
        CHECK(m.cwiseAbs().maxCoeff() < 5.0 * se_mean);
        CHECK((c - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 5.0 * std::sqrt(2.0) * se_mean);
    }
    SECTION("fixed seed reproduces bit-identical ensembles") {
        GaussianMixture mix({{0.4, VectorXd::Zero(2), MatrixXd::Identity(2, 2)},
                             {0.6, VectorXd::Ones(2), 2.0 * MatrixXd::Identity(2, 2)}});
        const Ensemble a = resample_mixture(mix, 500, 42);
        const Ensemble b = resample_mixture(mix, 500, 42);
        REQUIRE(a.members.size() == b.members.size());
        for (std::size_t i = 0; i < a.members.size(); ++i)
            CHECK((a.members[i] - b.members[i]).norm() == 0.0);
    }
    SECTION("zero-weight components are never selected") {
        VectorXd far = VectorXd::Constant(2, 100.0);
        GaussianMixture mix({{1.0, VectorXd::Zero(2), 0.01 * MatrixXd::Identity(2, 2)},
                             {0.0, far, 0.01 * MatrixXd::Identity(2, 2)}});
        const Ensemble ens = resample_mixture(mix, 1000, 3);
        for (const auto& x : ens.members) CHECK(x.norm() < 10.0);
    }
    SECTION("moment convergence consistent with 1/sqrt(M)") {
        GaussianMixture mix({{0.3, VectorXd::Zero(2), MatrixXd::Identity(2, 2)},
                             {0.7, 2.0 * VectorXd::Ones(2), 0.5 * MatrixXd::Identity(2, 2)}});
        const auto [mean, cov] = mixture_moments(mix);
        (void)cov;
        auto mean_err = [&](Eigen::Index m, int reps) {
            double acc = 0.0;
            for (int r = 0; r < reps; ++r) {
                const Ensemble e = resample_mixture(mix, m, 1000 + static_cast<std::uint64_t>(r));
                acc += (e.sample_mean() - mean).norm();
            }
            return acc / reps;
        };
        const double e_small = mean_err(400, 40);
        const double e_big = mean_err(6400, 40);
        const double ratio = e_small / e_big;  // ideal: sqrt(16) = 4
        CHECK(ratio > 2.0);
        CHECK(ratio < 8.0);
    }
}

TEST_CASE("engmf_step") {
    SECTION("no measurements leaves the ensemble unchanged") {
        RandomStream rng(419);
        Ensemble ens;
        for (int i = 0; i < 10; ++i) ens.members.push_back(rng.normal_vector(2));
        EngmfConfig cfg;
        const auto [out, snaps] = engmf_step(
            ens, [](double, const VectorXd& x) { return VectorXd::Zero(x.size()); }, 0.0, {}, {},
            {}, cfg);
        CHECK(snaps.empty());
        for (std::size_t i = 0; i < ens.members.size(); ++i)
            CHECK((out.members[i] - ens.members[i]).norm() == 0.0);
    }

    SECTION("linear-Gaussian toy converges to the Kalman posterior mean") {
        RandomStream rng(421);
        const Eigen::Index m = 2000;
        const VectorXd mu0 = VectorXd::Zero(2);
        const MatrixXd p0 = MatrixXd::Identity(2, 2);
        MatrixXd h = MatrixXd::Identity(2, 2);
        const MatrixXd r = MatrixXd::Identity(2, 2);
        const MeasurementModel model = make_linear_model(h, r);
        VectorXd y(2);
        y << 0.5, -0.5;  // modest innovation

        // Kalman oracle
        const MatrixXd k = p0 * h.transpose() * (h * p0 * h.transpose() + r).inverse();
        const VectorXd x_post = mu0 + k * (y - h * mu0);
        const MatrixXd p_post = p0 - k * h * p0;

        Ensemble ens;
        const MatrixXd l0 = cholesky_lower(p0);
        for (Eigen::Index i = 0; i < m; ++i) ens.members.push_back(rng.gaussian(mu0, l0));

        EngmfConfig cfg;
        cfg.updater = UpdaterSpec::ekf();
        cfg.scheme = WeightScheme::ImprovedDensity;
        cfg.seed = 99;
        const auto [out, snaps] = engmf_step(
            ens, [](double, const VectorXd& x) { return VectorXd::Zero(x.size()); }, 0.0, {0.0},
            model, {y}, cfg);
        (void)out;
        REQUIRE(snaps.size() == 1);
        const double se = std::sqrt(p_post.trace() / static_cast<double>(m));
        CHECK((snaps[0].posterior_mean - x_post).norm() < 3.0 * se);
    }

    SECTION("fixed seed is reproducible end to end") {
        RandomStream rng(431);
        Ensemble ens;
        for (int i = 0; i < 12; ++i) ens.members.push_back(rng.normal_vector(2));
        const MeasurementModel model = make_linear_model(MatrixXd::Identity(2, 2),
                                                         0.5 * MatrixXd::Identity(2, 2));
        EngmfConfig cfg;
        cfg.seed = 1234;
        const DerivativeFn dyn = [](double, const VectorXd& x) {
            VectorXd d(2);
            d << x[1], -x[0];
            return d;
        };
        const std::vector<double> epochs{0.1, 0.2, 0.3};
        const std::vector<VectorXd> ys{VectorXd::Zero(2), VectorXd::Ones(2), VectorXd::Zero(2)};
        const auto [a, snaps_a] = engmf_step(ens, dyn, 0.0, epochs, model, ys, cfg);
        const auto [b, snaps_b] = engmf_step(ens, dyn, 0.0, epochs, model, ys, cfg);
        for (std::size_t i = 0; i < a.members.size(); ++i)
            CHECK((a.members[i] - b.members[i]).norm() == 0.0);
        for (std::size_t s = 0; s < snaps_a.size(); ++s)
            CHECK((snaps_a[s].posterior_mean - snaps_b[s].posterior_mean).norm() == 0.0);
    }

    SECTION("errors carry the epoch index") {
        Ensemble ens;
        const VectorXd x = VectorXd::Constant(2, 0.25);
        for (int i = 0; i < 8; ++i) ens.members.push_back(x);  // degenerate at the first update
        const MeasurementModel model =
            make_linear_model(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
        EngmfConfig cfg;
        CHECK_THROWS_WITH(
            engmf_step(ens, [](double, const VectorXd& s) { return VectorXd::Zero(s.size()); },
                       0.0, {0.0}, model, {VectorXd::Zero(2)}, cfg),
            ContainsSubstring("epoch index 0"));
    }
}
