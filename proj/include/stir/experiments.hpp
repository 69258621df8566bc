#pragma once

#include "stir/analysis.hpp"
#include "stir/bandit.hpp"
#include "stir/datagen.hpp"
#include "stir/solve.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace stir {

// Command drivers behind the CLI. Everything lands in files or the log
// stream; summaries never include wall-clock numbers so seeded runs are
// reproducible byte for byte.

struct GenCommand {
  GeneratorSpec spec;
  std::string out;  // writes <out>.csv and <out>.truth
};
int run_gen(const GenCommand& cmd, std::ostream& log);

struct FitCommand {
  std::string data;            // dataset csv
  std::string truth;           // sidecar; empty disables error reporting
  std::string solver = "stir"; // stir|stir-gd|irls|ols|torrent|torrent-gd
  SolverConfig config;
  double torrent_alpha_hat = 0.15;
  double irls_truncation = 1.0;
  bool init_at_fake = false;  // start from the sidecar's decoy model
  std::string trace_out;    // jsonl; empty skips
  std::string summary_out;  // one csv row; empty skips
};
int run_fit(const FitCommand& cmd, std::ostream& log);

struct SweepCommand {
  GeneratorSpec base;
  SolverConfig config;
  std::string axis = "alpha";  // n|d|alpha|sigma
  std::vector<double> values;
  std::vector<std::string> solvers = {"stir"};
  int trials = 10;
  double torrent_alpha_hat = 0.15;
  double irls_truncation = 1.0;
  bool init_at_fake = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;  // csv
};
int run_sweep(const SweepCommand& cmd, std::ostream& log);

struct BanditCommand {
  BanditEnvConfig env;
  BanditPolicyConfig policy;
  std::vector<std::string> policies = {"wucb", "rucb", "linucb"};
  int trials = 10;
  int jobs = 1;
  std::string out_prefix;  // per-run trajectory csvs plus a summary csv
};
int run_bandit(const BanditCommand& cmd, std::ostream& log);

struct EstimateCommand {
  bool noisy = false;
  double noise_sigma = 0.1;  // noisy mode; the truncation used is 1/sigma
  std::int64_t samples = 1000000;
  int angle_count = 33;
  int r_count = 17;
  double eta = 2.0;  // reported breakdown threshold uses this
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;  // json report
};
int run_estimate(const EstimateCommand& cmd, std::ostream& log);

// Deterministic per-trial seed derivation shared by sweep and bandit runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index);

// Runs fn(i) for i in [0, count) across up to jobs threads. Results must be
// written to preallocated slots; ordering of side effects is up to callers.
void parallel_for(std::int64_t count, int jobs,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace stir
