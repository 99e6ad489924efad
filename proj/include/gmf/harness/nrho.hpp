#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "gmf/engmf.hpp"
#include "gmf/harness/config.hpp"
#include "gmf/harness/report.hpp"
#include "gmf/metrics.hpp"
#include "gmf/models.hpp"
#include "gmf/parallel.hpp"
#include "gmf/propagation.hpp"
#include "gmf/random.hpp"

namespace gmf::harness {

/// Measurement epochs grouped into tracklets: per tracklet, samples at the
/// cadence across the duration, then a quarter-period gap before the next.
struct TrackletSchedule {
    std::vector<double> epochs;           // scaled time, increasing
    std::vector<int> tracklet_of_epoch;   // parallel to epochs

    static TrackletSchedule build(const NrhoConfig& cfg, const CR3BPParams& params,
                                  double period) {
        TrackletSchedule s;
        const double duration = cfg.tracklet_duration_s / params.tu;
        const double cadence = cfg.cadence_s / params.tu;
        const double gap = period / 4.0;
        const int per_tracklet = static_cast<int>(std::floor(duration / cadence + 1e-9)) + 1;
        const int tracklets = cfg.orbits * cfg.tracklets_per_orbit;
        double start = 0.0;
        for (int k = 0; k < tracklets; ++k) {
            for (int j = 0; j < per_tracklet; ++j) {
                s.epochs.push_back(start + j * cadence);
                s.tracklet_of_epoch.push_back(k);
            }
            start += duration + gap;
        }
        return s;
    }
};

struct NrhoTrialResult {
    std::vector<double> rmse_full;   // per epoch
    std::vector<double> rmse_pos;
    std::vector<double> snees;
    bool flagged = false;
    bool failed = false;
    std::string failure;
};

/// One Monte Carlo trial of the tracking experiment.
inline NrhoTrialResult run_nrho_trial(const ScenarioConfig& cfg, const TrackletSchedule& schedule,
                                      const CR3BPParams& params, const MeasurementModel& model,
                                      const GroundSensor& sensor, std::size_t trial) {
    NrhoTrialResult out;
    const DerivativeFn dyn = [&params](double, const VectorXd& x) {
        return cr3bp_derivative(x, params);
    };
    const VectorXd x0 = nrho_initial_state();
    const MatrixXd p0 = nrho_initial_covariance();
    const MatrixXd l0 = cholesky_lower(p0);
    const double pre = 0.75 * kNrhoPeriod;

    try {
        RandomStream truth_stream(cfg.seed, {0x9e60, trial, 1});
        RandomStream meas_stream(cfg.seed, {0x9e60, trial, 2});
        RandomStream member_stream(cfg.seed, {0x9e60, trial, 3});

        // truth and every member start from the same distribution and are
        // pre-propagated three quarters of a period
        VectorXd truth = truth_stream.gaussian(x0, l0);
        truth = propagate(truth, 0.0, pre, dyn, cfg.integrator);

        Ensemble ens;
        ens.members.reserve(static_cast<std::size_t>(cfg.components));
        for (int i = 0; i < cfg.components; ++i) {
            VectorXd m = member_stream.gaussian(x0, l0);
            ens.members.push_back(propagate(m, 0.0, pre, dyn, cfg.integrator));
        }

        // simulate measurements along the truth
        std::vector<VectorXd> measurements;
        measurements.reserve(schedule.epochs.size());
        std::vector<VectorXd> truth_at_epoch;
        truth_at_epoch.reserve(schedule.epochs.size());
        double t = 0.0;
        VectorXd xt = truth;
        for (double epoch : schedule.epochs) {
            if (epoch > t) xt = propagate(xt, t, epoch, dyn, cfg.integrator);
            t = epoch;
            truth_at_epoch.push_back(xt);
            VectorXd y = radec_h(xt, sensor) + sensor.noise_std * meas_stream.normal_vector(2);
            y[0] = wrap_angle(y[0]);
            measurements.push_back(y);
        }

        EngmfConfig ecfg;
        ecfg.updater = cfg.updater;
        ecfg.scheme = cfg.scheme;
        ecfg.weight_options = cfg.weight_options;
        ecfg.integrator = cfg.integrator;
        ecfg.seed = rng::derive(cfg.seed, {0x9e60, trial, 4});
        ecfg.bandwidth_scale = cfg.nrho.bandwidth_scale;
        ecfg.shrink_kernel_means = cfg.nrho.shrink_kernel_means;
        ecfg.post_resample_inflation = cfg.nrho.post_resample_inflation;
        auto [final_ens, snapshots] =
            engmf_step(ens, dyn, 0.0, schedule.epochs, model, measurements, ecfg);
        (void)final_ens;

        out.rmse_full.reserve(snapshots.size());
        for (std::size_t k = 0; k < snapshots.size(); ++k) {
            const auto& snap = snapshots[k];
            const VectorXd& xt_k = truth_at_epoch[k];
            out.rmse_full.push_back(rmse(xt_k, snap.posterior_mean));
            out.rmse_pos.push_back(rmse_position(xt_k, snap.posterior_mean));
            out.snees.push_back(snees(xt_k, snap.posterior_mean, snap.posterior_cov));
            if (out.rmse_pos.back() > cfg.nrho.divergence_gate_lu) out.flagged = true;
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.failure = e.what();
    }
    return out;
}

inline RunReport run_nrho(const ScenarioConfig& cfg) {
    const CR3BPParams params = earth_moon_params();
    const GroundSensor sensor;
    const MeasurementModel model = radec_model(sensor);
    const TrackletSchedule schedule = TrackletSchedule::build(cfg.nrho, params, kNrhoPeriod);

    std::vector<NrhoTrialResult> results(static_cast<std::size_t>(cfg.monte_carlo));
    parallel_for(
        results.size(),
        [&](std::size_t t) { results[t] = run_nrho_trial(cfg, schedule, params, model, sensor, t); },
        cfg.threads);

    MetricsReport rep;
    rep.label = "engmf-" + updater_name(cfg.updater.kind) + "-" + scheme_name(cfg.scheme);
    rep.components = cfg.components;

    RunReport report;
    report.scenario = "nrho";
    report.seed = cfg.seed;

    CompensatedSum rmse_sum, pos_sum, snees_sum;
    int completed = 0, flagged = 0, failed = 0;
    for (std::size_t t = 0; t < results.size(); ++t) {
        const auto& r = results[t];
        if (r.failed) {
            ++failed;
            continue;
        }
        ++completed;
        if (r.flagged) ++flagged;
        // average over epochs first, then over trials
        CompensatedSum rf, rp, sn;
        for (std::size_t k = 0; k < r.rmse_full.size(); ++k) {
            rf.add(r.rmse_full[k]);
            rp.add(r.rmse_pos[k]);
            sn.add(r.snees[k]);
            report.per_trial.push_back({rep.label, static_cast<int>(t), static_cast<int>(k),
                                        r.rmse_full[k], r.snees[k]});
        }
        rmse_sum.add(rf.mean());
        pos_sum.add(rp.mean());
        snees_sum.add(sn.mean());
    }
    if (completed == 0) throw std::runtime_error("all NRHO trials failed");

    rep.trials = completed;
    rep.flagged_trials = flagged;
    rep.failed_trials = failed;
    rep.rmse = rmse_sum.mean();
    rep.rmse_position = pos_sum.mean();
    rep.snees = snees_sum.mean();
    report.records.push_back(rep);
    return report;
}

}  // namespace gmf::harness
