#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmf/gaussian.hpp"
#include "gmf/metrics.hpp"

namespace gmf::harness {

struct PerTrialRow {
    std::string method;
    int trial = 0;
    int epoch = 0;
    double rmse = 0.0;
    double snees = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<MetricsReport> records;
    std::vector<PerTrialRow> per_trial;

    /// Largest flagged-trial fraction over all records.
    double worst_flagged_fraction() const {
        double worst = 0.0;
        for (const auto& r : records)
            if (r.trials > 0)
                worst = std::max(worst, static_cast<double>(r.flagged_trials) / r.trials);
        return worst;
    }
};

inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["method"] = r.label;
    j["components"] = r.components;
    j["trials"] = r.trials;
    j["flagged_trials"] = r.flagged_trials;
    j["failed_trials"] = r.failed_trials;
    j["rmse"] = r.rmse;
    j["rmse_position"] = r.rmse_position;
    if (r.kld)
        j["kld"] = *r.kld;
    else
        j["kld"] = nullptr;
    j["snees"] = r.snees;
    return j;
}

inline void write_report(const RunReport& report, const std::string& path) {
    nlohmann::json j;
    j["scenario"] = report.scenario;
    j["seed"] = report.seed;
    j["records"] = nlohmann::json::array();
    for (const auto& r : report.records) j["records"].push_back(to_json(r));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report file: " + path);
    out << j.dump(2) << "\n";
}

inline void write_trial_csv(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open csv file: " + path);
    out << "method,trial,epoch,rmse,snees\n";
    for (const auto& row : report.per_trial) {
        out << row.method << ',' << row.trial << ',' << row.epoch << ',' << row.rmse << ',';
        if (std::isnan(row.snees))
            out << "";
        else
            out << row.snees;
        out << '\n';
    }
}

/// Dump a 2D field as "x1,x2,density" rows for external plotting.
inline void write_grid_csv(const GridField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open grid file: " + path);
    out << "x1,x2,density\n";
    for (Eigen::Index i = 0; i < field.axis_x.size(); ++i)
        for (Eigen::Index j = 0; j < field.axis_y.size(); ++j)
            out << field.axis_x[i] << ',' << field.axis_y[j] << ',' << field.values(i, j) << '\n';
}

}  // namespace gmf::harness
