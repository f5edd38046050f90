#pragma once

#include <string>
#include <vector>

#include "revolver/env_sim.hpp"
#include "revolver/theorem.hpp"
#include "revolver/transfer.hpp"

namespace revolver {

// %.17g — enough digits that reading the value back restores the double.
std::string format_double(double x);

uint64_t fnv1a64(const std::string& bytes);
std::string hex64(uint64_t v);

void write_file_atomic(const std::string& path, const std::string& content);

struct RunManifest {
    std::string code_version;
    std::string subcommand;
    std::vector<std::string> args;
    std::string config_hash;  // fnv1a of the exact config bytes
    uint64_t seed = 0;
    double wall_seconds = 0.0;
};

// Writes report.csv, final_eval.csv and manifest.json into dir. The CSVs are
// pure functions of the report, so re-export is byte-identical; the manifest
// carries timings and may differ.
void export_report(const TransferReport& report, const RunManifest& manifest,
                   const std::string& dir);

std::string report_csv(const TransferReport& report);
std::string final_eval_csv(const TransferReport& report);

struct TrajectoryRow {
    int step = 0;
    double beta = 0.0;
    std::vector<double> q, qdot, action;
    double reward = 0.0;
    bool done = false;
};

std::vector<TrajectoryRow> record_rollout(const RobotModel& model,
                                          const EnvFamily& family, const Policy& policy,
                                          uint64_t seed, int horizon);

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

std::string theorem_csv(const ValidationReport& report);

}  // namespace revolver
