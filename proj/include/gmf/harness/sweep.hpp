#pragma once

#include <string>
#include <vector>

#include "gmf/harness/avocado.hpp"
#include "gmf/harness/config.hpp"
#include "gmf/harness/report.hpp"

namespace gmf::harness {

/// Avocado component sweep: one record per (component count, method).
/// Traditional and improved schemes run on shared draws per M so curves are
/// directly comparable.
inline RunReport run_sweep(const ScenarioConfig& cfg, const std::vector<int>& component_counts,
                           const std::vector<UpdaterSpec>& updaters) {
    RunReport report;
    report.scenario = "sweep";
    report.seed = cfg.seed;
    for (int m : component_counts) {
        ScenarioConfig sub = cfg;
        sub.components = m;
        for (const auto& updater : updaters) {
            const bool sigma = updater.sigma_based();
            const std::vector<WeightScheme> schemes =
                sigma ? std::vector<WeightScheme>{WeightScheme::TraditionalSigma,
                                                  WeightScheme::ImprovedSigma}
                      : std::vector<WeightScheme>{WeightScheme::TraditionalDensity,
                                                  WeightScheme::ImprovedDensity};
            AvocadoRunOutput out = run_avocado_methods(sub, updater, schemes);
            for (auto& mr : out.methods) report.records.push_back(mr.report);
        }
    }
    return report;
}

}  // namespace gmf::harness
