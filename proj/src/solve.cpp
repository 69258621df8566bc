#include "stir/solve.hpp"

#include "stir/loss.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace stir {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ns_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

Vector starting_model(const Dataset& data, const SolverConfig& config) {
  if (config.initial_model.size() == 0) return Vector::Zero(data.d());
  return config.initial_model;
}

// Solve, and on a singular factorization retry once with a small ridge
// proportional to the normal matrix trace.
Vector wls_solve_robust(const Dataset& data, const Vector& weights,
                        double ridge) {
  try {
    return wls_solve({data, weights, ridge});
  } catch (const SingularSystem&) {
    const double trace =
        (data.covariates * weights.asDiagonal() * data.covariates.transpose())
            .trace();
    const double bump = 1e-10 * trace / static_cast<double>(data.d());
    return wls_solve({data, weights, ridge + bump});
  }
}

void record_iterate(StageRecord& rec, const Vector& w, const Dataset& data,
                    double epsilon, const GroundTruth* truth) {
  rec.iterates.push_back(w);
  rec.objective.push_back(empirical_scaled_huber(w, data, epsilon));
  if (truth != nullptr) {
    rec.dist_to_gold.push_back((w - truth->gold_model).norm());
  }
}

enum class InnerUpdate { ExactSolve, GradientStep };

// One truncation stage: refit at fixed M until the step norm drops below the
// exit threshold. At least one refit always happens.
StageRecord run_stage(const Dataset& data, double truncation, Vector& model,
                      double exit_threshold, InnerUpdate update,
                      const SolverConfig& config, const GroundTruth* truth) {
  StageRecord rec;
  rec.truncation = truncation;
  const double epsilon = 1.0 / truncation;
  const auto start = Clock::now();
  double step = std::numeric_limits<double>::infinity();
  int iter = 0;
  do {
    const WeightAssignment wa = truncated_weights(model, data, truncation);
    Vector next;
    if (update == InnerUpdate::ExactSolve) {
      next = wls_solve_robust(data, wa.weights, config.ridge);
    } else {
      const Vector r = data.covariates.transpose() * model - data.responses;
      const Vector grad =
          data.covariates * wa.weights.cwiseProduct(r) /
          static_cast<double>(data.n());
      next = model - (2.0 * config.step_length / truncation) * grad;
    }
    step = (next - model).norm();
    model = std::move(next);
    record_iterate(rec, model, data, epsilon, truth);
    ++iter;
  } while (step > exit_threshold && iter < config.max_inner_iterations);
  rec.exit_step_norm = step;
  rec.hit_iteration_cap = step > exit_threshold;
  rec.wall_ns = ns_since(start);
  return rec;
}

SolverTrace run_stagewise(const Dataset& data, const SolverConfig& config,
                          InnerUpdate update, const GroundTruth* truth) {
  validate(data);
  validate(config, data.d());
  SolverTrace trace;
  trace.increment = config.increment;
  const auto start = Clock::now();

  Vector model = starting_model(data, config);
  double truncation = config.auto_initial_truncation
                          ? auto_initial_truncation(data, config)
                          : config.initial_truncation;
  trace.converged = false;
  for (int stage = 0; stage < config.max_stages; ++stage) {
    const double threshold = 2.0 / (config.increment * truncation);
    StageRecord rec = run_stage(data, truncation, model, threshold, update,
                                config, truth);
    const bool capped = rec.hit_iteration_cap;
    trace.stages.push_back(std::move(rec));
    if (capped) break;  // no progress at this truncation
    if (1.0 / truncation <= config.target_accuracy) {
      trace.converged = true;
      break;
    }
    truncation *= config.increment;
  }
  trace.final_model = model;
  trace.total_wall_ns = ns_since(start);
  return trace;
}

std::vector<Index> smallest_residual_indices(const Vector& r, Index keep) {
  std::vector<Index> idx(static_cast<size_t>(r.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double ra = std::abs(r[a]), rb = std::abs(r[b]);
    if (ra != rb) return ra < rb;
    return a < b;
  });
  idx.resize(static_cast<size_t>(keep));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset subset(const Dataset& data, const std::vector<Index>& idx) {
  Matrix X(data.d(), static_cast<Index>(idx.size()));
  Vector y(static_cast<Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) {
    X.col(static_cast<Index>(k)) = data.covariates.col(idx[k]);
    y[static_cast<Index>(k)] = data.responses[idx[k]];
  }
  return Dataset{std::move(X), std::move(y)};
}

SolverTrace run_thresholding(const Dataset& data, double alpha_hat,
                             const SolverConfig& config,
                             const GroundTruth* truth, bool gradient) {
  validate(data);
  validate(config, data.d());
  if (alpha_hat < 0.0 || alpha_hat >= 0.5) {
    throw InvalidParameter("alpha_hat must lie in [0, 0.5)");
  }
  const Index keep = static_cast<Index>(
      std::ceil((1.0 - alpha_hat) * static_cast<double>(data.n())));

  SolverTrace trace;
  trace.increment = config.increment;
  const auto start = Clock::now();
  StageRecord rec;
  rec.truncation = 0.0;  // no truncation level in the thresholding scheme

  Vector model = starting_model(data, config);
  std::vector<Index> active(static_cast<size_t>(data.n()));
  std::iota(active.begin(), active.end(), Index{0});
  double step = std::numeric_limits<double>::infinity();
  bool stable = false;
  int iter = 0;
  do {
    const Dataset sub = subset(data, active);
    Vector next;
    if (gradient) {
      const Vector ra = sub.covariates.transpose() * model - sub.responses;
      next = model - config.step_length * 2.0 / static_cast<double>(data.n()) *
                         (sub.covariates * ra);
    } else {
      next =
          wls_solve_robust(sub, Vector::Ones(sub.n()), config.ridge);
    }
    step = (next - model).norm();
    model = std::move(next);
    rec.iterates.push_back(model);
    rec.objective.push_back(
        (subset(data, active).covariates.transpose() * model -
         subset(data, active).responses)
            .squaredNorm() /
        static_cast<double>(data.n()));
    if (truth != nullptr) {
      rec.dist_to_gold.push_back((model - truth->gold_model).norm());
    }
    auto refreshed = smallest_residual_indices(residuals(model, data), keep);
    stable = refreshed == active && step <= config.target_accuracy;
    active = std::move(refreshed);
    ++iter;
  } while (!stable && iter < config.max_inner_iterations);
  rec.exit_step_norm = step;
  rec.hit_iteration_cap = !stable;
  rec.wall_ns = ns_since(start);

  trace.converged = stable;
  trace.stages.push_back(std::move(rec));
  trace.final_model = model;
  trace.total_wall_ns = ns_since(start);
  return trace;
}

double median_abs_residual(const Vector& model, const Dataset& data) {
  Vector r = residuals(model, data);
  std::vector<double> a(static_cast<size_t>(r.size()));
  for (Index i = 0; i < r.size(); ++i) a[static_cast<size_t>(i)] = std::abs(r[i]);
  auto mid = a.begin() + a.size() / 2;
  std::nth_element(a.begin(), mid, a.end());
  return *mid;
}

}  // namespace

Vector wls_solve(const WlsProblem& problem) {
  validate(problem.data);
  if (problem.weights.size() != problem.data.n()) {
    throw DimensionMismatch("weight count does not match points");
  }
  if (problem.ridge < 0.0) {
    throw InvalidParameter("ridge must be nonnegative");
  }
  if (!problem.weights.allFinite() || (problem.weights.array() < 0.0).any()) {
    throw InvalidParameter("weights must be finite and nonnegative");
  }
  const Matrix& X = problem.data.covariates;
  Matrix A = X * problem.weights.asDiagonal() * X.transpose();
  if (problem.ridge > 0.0) A.diagonal().array() += problem.ridge;
  const Vector b = X * problem.weights.cwiseProduct(problem.data.responses);

  Eigen::LDLT<Matrix> ldlt(A);
  const double largest = ldlt.vectorD().cwiseAbs().maxCoeff();
  const double smallest = ldlt.vectorD().minCoeff();
  const double floor = largest * Eigen::NumTraits<double>::epsilon() *
                       static_cast<double>(problem.data.d());
  if (ldlt.info() != Eigen::Success || !(smallest > floor)) {
    throw SingularSystem("weighted normal system is numerically singular",
                         smallest);
  }
  Vector w = ldlt.solve(b);
  // One refinement pass tightens the normal-system residual.
  w += ldlt.solve(b - A * w);
  return w;
}

Vector ols(const Dataset& data) {
  return wls_solve({data, Vector::Ones(data.n()), 0.0});
}

SolverTrace irls_fixed(const Dataset& data, double truncation,
                       const SolverConfig& config, const GroundTruth* truth) {
  validate(data);
  validate(config, data.d());
  if (!(truncation > 0.0)) {
    throw InvalidParameter("truncation must be positive");
  }
  SolverTrace trace;
  trace.increment = config.increment;
  const auto start = Clock::now();
  Vector model = starting_model(data, config);
  StageRecord rec = run_stage(data, truncation, model, config.target_accuracy,
                              InnerUpdate::ExactSolve, config, truth);
  trace.converged = !rec.hit_iteration_cap;
  trace.stages.push_back(std::move(rec));
  trace.final_model = model;
  trace.total_wall_ns = ns_since(start);
  return trace;
}

SolverTrace stir(const Dataset& data, const SolverConfig& config,
                 const GroundTruth* truth) {
  return run_stagewise(data, config, InnerUpdate::ExactSolve, truth);
}

SolverTrace stir_gd(const Dataset& data, const SolverConfig& config,
                    const GroundTruth* truth) {
  return run_stagewise(data, config, InnerUpdate::GradientStep, truth);
}

SolverTrace torrent(const Dataset& data, double alpha_hat,
                    const SolverConfig& config, const GroundTruth* truth) {
  return run_thresholding(data, alpha_hat, config, truth, false);
}

SolverTrace torrent_gd(const Dataset& data, double alpha_hat,
                       const SolverConfig& config, const GroundTruth* truth) {
  return run_thresholding(data, alpha_hat, config, truth, true);
}

double auto_initial_truncation(const Dataset& data,
                               const SolverConfig& config) {
  validate(data);
  const Vector w0 = starting_model(data, config);
  const double scale = w0.norm();
  double truncation = scale > 0.0 ? 1.0 / scale : 1.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Vector model = w0;
    const double before = median_abs_residual(model, data);
    StageRecord rec =
        run_stage(data, truncation, model,
                  2.0 / (config.increment * truncation),
                  InnerUpdate::ExactSolve, config, nullptr);
    const double after = median_abs_residual(model, data);
    const bool contracted =
        !rec.hit_iteration_cap &&
        (after <= 0.75 * before || after <= 1.0 / truncation);
    if (contracted) return truncation;
    truncation *= 0.5;
  }
  return config.initial_truncation;
}

}  // namespace stir
