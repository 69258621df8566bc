#include "stir/experiments.hpp"

#include "stir/io.hpp"
#include "stir/loss.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace stir {

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot hash missing file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

// Wraps a one-shot model into the common trace shape.
SolverTrace trace_from_model(Vector model, const Dataset& data,
                             const GroundTruth* truth) {
  SolverTrace trace;
  StageRecord rec;
  rec.truncation = 0.0;
  rec.iterates.push_back(model);
  rec.objective.push_back(residuals(model, data).squaredNorm() /
                          static_cast<double>(data.n()));
  if (truth != nullptr) {
    rec.dist_to_gold.push_back((model - truth->gold_model).norm());
  }
  trace.stages.push_back(std::move(rec));
  trace.final_model = std::move(model);
  trace.converged = true;
  return trace;
}

SolverTrace run_solver(const std::string& name, const Dataset& data,
                       const SolverConfig& config, double torrent_alpha_hat,
                       double irls_truncation, const GroundTruth* truth) {
  if (name == "stir") return stir(data, config, truth);
  if (name == "stir-gd") return stir_gd(data, config, truth);
  if (name == "irls") return irls_fixed(data, irls_truncation, config, truth);
  if (name == "torrent") return torrent(data, torrent_alpha_hat, config, truth);
  if (name == "torrent-gd") {
    return torrent_gd(data, torrent_alpha_hat, config, truth);
  }
  if (name == "ols") return trace_from_model(ols(data), data, truth);
  throw InvalidParameter("unknown solver: " + name);
}

int total_inner_iterations(const SolverTrace& trace) {
  int total = 0;
  for (const auto& stage : trace.stages) total += stage.inner_iterations();
  return total;
}

BanditPolicy parse_policy(const std::string& name) {
  if (name == "wucb") return BanditPolicy::WucbLin;
  if (name == "rucb") return BanditPolicy::RucbLin;
  if (name == "linucb") return BanditPolicy::LinUcb;
  throw InvalidParameter("unknown policy: " + name);
}

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Summary summarize(std::vector<double> xs) {
  Summary s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  std::sort(xs.begin(), xs.end());
  s.min = xs.front();
  s.max = xs.back();
  const size_t mid = xs.size() / 2;
  s.median = xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1) +
                    0xBF58476D1CE4E5B9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::int64_t count, int jobs,
                  const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(std::max(jobs, 1), count));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int run_gen(const GenCommand& cmd, std::ostream& log) {
  if (cmd.out.empty()) throw InvalidParameter("gen needs an output prefix");
  const auto [data, truth] = generate(cmd.spec);
  const std::string csv = cmd.out + ".csv";
  const std::string sidecar = cmd.out + ".truth";
  write_dataset_csv(data, csv);
  write_ground_truth(truth, data.n(), sidecar);
  log << "gen n=" << data.n() << " d=" << data.d()
      << " corrupted=" << truth.corruption_support.size()
      << " dataset_hash=" << file_hash_hex(csv)
      << " truth_hash=" << file_hash_hex(sidecar) << '\n';
  return 0;
}

int run_fit(const FitCommand& cmd, std::ostream& log) {
  const Dataset data = read_dataset_csv(cmd.data);
  GroundTruth truth;
  const bool have_truth = !cmd.truth.empty();
  if (have_truth) truth = read_ground_truth(cmd.truth);

  SolverConfig config = cmd.config;
  if (config.initial_model.size() == 0 && have_truth && truth.fake_model &&
      cmd.init_at_fake) {
    config.initial_model = *truth.fake_model;
  }
  const SolverTrace trace =
      run_solver(cmd.solver, data, config, cmd.torrent_alpha_hat,
                 cmd.irls_truncation, have_truth ? &truth : nullptr);

  if (!cmd.trace_out.empty()) write_trace_jsonl(trace, cmd.trace_out);

  const double err = trace.final_dist_to_gold();
  const std::string row =
      cmd.solver + ',' + std::to_string(data.n()) + ',' +
      std::to_string(data.d()) + ',' + (trace.converged ? "1" : "0") + ',' +
      std::to_string(trace.stages.size()) + ',' +
      std::to_string(total_inner_iterations(trace)) + ',' +
      format_double(err);
  if (!cmd.summary_out.empty()) {
    std::ofstream f(cmd.summary_out);
    if (!f) throw IoError("cannot open " + cmd.summary_out);
    f << "solver,n,d,converged,stages,inner_iterations,final_error\n"
      << row << '\n';
  }
  log << "fit " << row << '\n';
  return 0;
}

int run_sweep(const SweepCommand& cmd, std::ostream& log) {
  if (cmd.values.empty()) throw InvalidParameter("sweep needs axis values");
  if (cmd.solvers.empty()) throw InvalidParameter("sweep needs solvers");
  if (cmd.trials < 1) throw InvalidParameter("sweep needs trials >= 1");
  if (cmd.axis != "n" && cmd.axis != "d" && cmd.axis != "alpha" &&
      cmd.axis != "sigma") {
    throw InvalidParameter("sweep axis must be one of n, d, alpha, sigma");
  }

  const std::int64_t cells = static_cast<std::int64_t>(cmd.values.size());
  const std::int64_t tasks = cells * cmd.trials;
  // errors[task][solver]
  std::vector<std::vector<double>> errors(
      static_cast<size_t>(tasks),
      std::vector<double>(cmd.solvers.size(), 0.0));

  parallel_for(tasks, cmd.jobs, [&](std::int64_t task) {
    const std::int64_t cell = task / cmd.trials;
    const std::int64_t trial = task % cmd.trials;
    GeneratorSpec spec = cmd.base;
    const double value = cmd.values[static_cast<size_t>(cell)];
    if (cmd.axis == "n") spec.n = static_cast<Index>(value);
    if (cmd.axis == "d") spec.d = static_cast<Index>(value);
    if (cmd.axis == "alpha") spec.corruption_fraction = value;
    if (cmd.axis == "sigma") spec.dense_noise_sigma = value;
    spec.seed = derive_seed(cmd.seed, static_cast<std::uint64_t>(cell),
                            static_cast<std::uint64_t>(trial));
    const auto [data, truth] = generate(spec);
    for (size_t s = 0; s < cmd.solvers.size(); ++s) {
      SolverConfig config = cmd.config;
      if (cmd.init_at_fake && truth.fake_model) {
        config.initial_model = *truth.fake_model;
      }
      const SolverTrace trace =
          run_solver(cmd.solvers[s], data, config, cmd.torrent_alpha_hat,
                     cmd.irls_truncation, &truth);
      errors[static_cast<size_t>(task)][s] =
          (trace.final_model - truth.gold_model).norm();
    }
  });

  std::string out = "axis,value,solver,trials,mean_error,median_error,std_error\n";
  for (std::int64_t cell = 0; cell < cells; ++cell) {
    for (size_t s = 0; s < cmd.solvers.size(); ++s) {
      std::vector<double> xs;
      xs.reserve(static_cast<size_t>(cmd.trials));
      for (int trial = 0; trial < cmd.trials; ++trial) {
        xs.push_back(errors[static_cast<size_t>(cell * cmd.trials + trial)][s]);
      }
      const Summary sum = summarize(xs);
      out += cmd.axis + ',' +
             format_double(cmd.values[static_cast<size_t>(cell)]) + ',' +
             cmd.solvers[s] + ',' + std::to_string(cmd.trials) + ',' +
             format_double(sum.mean) + ',' + format_double(sum.median) + ',' +
             format_double(sum.stddev) + '\n';
    }
  }
  if (!cmd.out.empty()) {
    std::ofstream f(cmd.out);
    if (!f) throw IoError("cannot open " + cmd.out);
    f << out;
  }
  log << out;
  return 0;
}

int run_bandit(const BanditCommand& cmd, std::ostream& log) {
  if (cmd.policies.empty()) throw InvalidParameter("bandit needs policies");
  if (cmd.trials < 1) throw InvalidParameter("bandit needs trials >= 1");
  for (const auto& p : cmd.policies) parse_policy(p);

  const std::int64_t tasks =
      static_cast<std::int64_t>(cmd.policies.size()) * cmd.trials;
  std::vector<std::vector<TrajectoryPoint>> runs(static_cast<size_t>(tasks));
  parallel_for(tasks, cmd.jobs, [&](std::int64_t task) {
    const size_t p = static_cast<size_t>(task / cmd.trials);
    const int trial = static_cast<int>(task % cmd.trials);
    BanditEnvConfig env = cmd.env;
    // One environment seed per trial, shared by every policy.
    env.seed = derive_seed(cmd.env.seed, 7, static_cast<std::uint64_t>(trial));
    runs[static_cast<size_t>(task)] =
        simulate(parse_policy(cmd.policies[p]), env, cmd.policy);
  });

  std::string out = "policy,trials,mean_final_regret,std_final_regret,min,max\n";
  for (size_t p = 0; p < cmd.policies.size(); ++p) {
    std::vector<double> finals;
    for (int trial = 0; trial < cmd.trials; ++trial) {
      const auto& run =
          runs[p * static_cast<size_t>(cmd.trials) + static_cast<size_t>(trial)];
      finals.push_back(run.back().cumulative_regret);
      if (!cmd.out_prefix.empty()) {
        write_trajectory_csv(run, cmd.out_prefix + "_" + cmd.policies[p] +
                                      "_t" + std::to_string(trial) + ".csv");
      }
    }
    const Summary sum = summarize(finals);
    out += cmd.policies[p] + ',' + std::to_string(cmd.trials) + ',' +
           format_double(sum.mean) + ',' + format_double(sum.stddev) + ',' +
           format_double(sum.min) + ',' + format_double(sum.max) + '\n';
  }
  if (!cmd.out_prefix.empty()) {
    std::ofstream f(cmd.out_prefix + "_summary.csv");
    if (!f) throw IoError("cannot open bandit summary file");
    f << out;
  }
  log << out;
  return 0;
}

int run_estimate(const EstimateCommand& cmd, std::ostream& log) {
  nlohmann::ordered_json report;
  const CovariateModel isotropic;
  Vector u(2), v_par(2), v_orth(2);
  u << 1.0, 0.0;
  v_par << 1.0, 0.0;
  v_orth << 0.0, 1.0;

  const auto to_json = [](const MonteCarloEstimate& est) {
    return nlohmann::ordered_json{{"value", est.value},
                                  {"std_error", est.std_error},
                                  {"samples", est.samples},
                                  {"seed", est.seed}};
  };

  if (!cmd.noisy) {
    report["mode"] = "clean";
    const auto aligned = estimate_constant_c(isotropic, u, v_par, cmd.samples,
                                             derive_seed(cmd.seed, 1, 0),
                                             cmd.jobs);
    const auto orth = estimate_constant_c(isotropic, u, v_orth, cmd.samples,
                                          derive_seed(cmd.seed, 2, 0),
                                          cmd.jobs);
    report["aligned"] = to_json(aligned);
    report["aligned"]["quadrature"] = constant_c_quadrature(u, v_par);
    report["orthogonal"] = to_json(orth);
    report["orthogonal"]["quadrature"] = constant_c_quadrature(u, v_orth);
    const double infimum = constant_c_grid_infimum(cmd.angle_count);
    report["grid_infimum"] = infimum;
    report["breakdown_threshold"] = {
        {"eta", cmd.eta},
        {"value", breakdown_threshold(infimum, cmd.eta, false)}};
  } else {
    report["mode"] = "noisy";
    report["noise_sigma"] = cmd.noise_sigma;
    const double truncation = 1.0 / cmd.noise_sigma;
    report["truncation"] = truncation;
    const auto infimum = constant_c_noisy_grid_infimum(
        cmd.noise_sigma, truncation, cmd.samples, derive_seed(cmd.seed, 3, 0),
        cmd.angle_count, cmd.r_count, cmd.jobs);
    report["grid_infimum"] = to_json(infimum);
    report["breakdown_threshold"] = {
        {"eta", cmd.eta},
        {"value", breakdown_threshold(infimum.value, cmd.eta, true)}};
  }
  report["samples"] = cmd.samples;
  report["seed"] = cmd.seed;

  const std::string text = report.dump(2);
  if (!cmd.out.empty()) {
    std::ofstream f(cmd.out);
    if (!f) throw IoError("cannot open " + cmd.out);
    f << text << '\n';
  }
  log << text << '\n';
  return 0;
}

}  // namespace stir
