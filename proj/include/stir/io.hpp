#pragma once

#include "stir/bandit.hpp"
#include "stir/core.hpp"

#include <string>
#include <vector>

namespace stir {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset CSV: header x_1,...,x_d,y then one row per point. Doubles are
// written with 17 significant digits so a round trip is bit-exact.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// Ground-truth sidecar, a line-oriented key-value file. Corruption values are
// stored sparsely as index:value pairs.
void write_ground_truth(const GroundTruth& truth, Index n,
                        const std::string& path);
GroundTruth read_ground_truth(const std::string& path);

// Solver trace as JSON lines, one record per inner iterate:
// {"stage":..,"iter":..,"M":..,"dist_to_gold":..,"objective":..,"elapsed_ns":..}
void write_trace_jsonl(const SolverTrace& trace, const std::string& path);

// Bandit trajectory CSV with columns
// t,arm_index,reward,corrupted_flag,instant_regret,cumulative_regret.
void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::string& path);

// Formats a double so that reading it back recovers the same bits.
std::string format_double(double x);

}  // namespace stir
