#include "stir/analysis.hpp"

#include "stir/experiments.hpp"
#include "stir/loss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace stir {

namespace {

constexpr std::int64_t kShardSize = 1 << 16;

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Accumulator {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise merge; order of merges is fixed by the caller.
  void merge(const Accumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(count + other.count);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(other.count) / total;
    count += other.count;
  }
};

void check_unit(const Vector& v, const char* name) {
  if (std::abs(v.norm() - 1.0) > 1e-8) {
    throw InvalidParameter(std::string(name) + " must be a unit vector");
  }
}

// Sharded Monte Carlo mean of integrand(x, rng). Shard seeds depend only on
// (seed, shard index) and shards merge in index order, so the estimate is
// identical for any jobs value.
MonteCarloEstimate sharded_mc(
    const CovariateModel& model, Index d, std::int64_t samples,
    std::uint64_t seed, int jobs,
    const std::function<double(const Vector&, Rng&)>& integrand) {
  if (samples < 1) throw InvalidParameter("need at least one sample");
  const std::int64_t shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<Accumulator> acc(static_cast<size_t>(shards));
  const CovariateSampler sample(model, d);
  parallel_for(shards, jobs, [&](std::int64_t k) {
    Rng rng(mix64(seed ^ static_cast<std::uint64_t>(k)));
    const std::int64_t lo = k * kShardSize;
    const std::int64_t hi = std::min(samples, lo + kShardSize);
    Accumulator a;
    for (std::int64_t i = lo; i < hi; ++i) {
      const Vector x = sample(rng);
      a.add(integrand(x, rng));
    }
    acc[static_cast<size_t>(k)] = a;
  });
  Accumulator total;
  for (const auto& a : acc) total.merge(a);
  MonteCarloEstimate est;
  est.value = total.mean;
  est.std_error = total.count > 1
                      ? std::sqrt(total.m2 /
                                  static_cast<double>(total.count - 1) /
                                  static_cast<double>(total.count))
                      : 0.0;
  est.samples = total.count;
  est.seed = seed;
  return est;
}

// Adaptive Simpson on [a, b] to the given absolute tolerance.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  const double m = 0.5 * (a + b);
  return simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

// Direction split of v against u: parallel component and leftover norm.
std::pair<double, double> split_direction(const Vector& u, const Vector& v) {
  const double par = u.dot(v);
  const double rest = std::sqrt(std::max(0.0, 1.0 - par * par));
  return {par, rest};
}

}  // namespace

SpectralReport wsc_wss_report(const Dataset& data, const GroundTruth& truth,
                              const WeightAssignment& weights) {
  validate(data);
  if (weights.weights.size() != data.n()) {
    throw DimensionMismatch("weight count does not match points");
  }
  Matrix gram = Matrix::Zero(data.d(), data.d());
  Index good = 0;
  for (Index i = 0; i < data.n(); ++i) {
    if (truth.is_corrupted(i)) continue;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data.covariates.col(i),
                                                    weights.weights[i]);
    ++good;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  SpectralReport report;
  report.lambda_min = eig.eigenvalues().minCoeff();
  report.lambda_max = eig.eigenvalues().maxCoeff();
  report.truncation = weights.truncation;
  report.good_count = good;
  const double denom =
      weights.truncation * static_cast<double>(std::max<Index>(good, 1));
  report.normalized_min = report.lambda_min / denom;
  report.normalized_max = report.lambda_max / denom;
  return report;
}

MonteCarloEstimate estimate_constant_c(const CovariateModel& model,
                                       const Vector& u, const Vector& v,
                                       std::int64_t samples,
                                       std::uint64_t seed, int jobs) {
  if (u.size() != v.size()) throw DimensionMismatch("u and v sizes differ");
  check_unit(u, "u");
  check_unit(v, "v");
  return sharded_mc(model, u.size(), samples, seed, jobs,
                    [&u, &v](const Vector& x, Rng&) {
                      const double a = std::abs(u.dot(x));
                      const double xv = v.dot(x);
                      const double w = a == 0.0 ? 1.0 : std::min(1.0 / a, 1.0);
                      return w * xv * xv;
                    });
}

double constant_c_quadrature(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw DimensionMismatch("u and v sizes differ");
  check_unit(u, "u");
  check_unit(v, "v");
  const auto [par, rest] = split_direction(u, v);
  const double gauss = std::sqrt(2.0 / 3.14159265358979323846);
  // Half-normal expectations of min(1/t, 1) t^2 and min(1/t, 1).
  const auto density = [gauss](double t) {
    return gauss * std::exp(-0.5 * t * t);
  };
  const double tail = 40.0;
  const double tol = 1e-12;
  const double a_val =
      integrate([&](double t) { return t * t * density(t); }, 0.0, 1.0, tol) +
      integrate([&](double t) { return t * density(t); }, 1.0, tail, tol);
  const double b_val =
      integrate([&](double t) { return density(t); }, 0.0, 1.0, tol) +
      integrate([&](double t) { return density(t) / t; }, 1.0, tail, tol);
  return par * par * a_val + rest * rest * b_val;
}

double constant_c_grid_infimum(int angle_count) {
  if (angle_count < 2) throw InvalidParameter("need at least two angles");
  Vector u(2), v(2);
  u << 1.0, 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < angle_count; ++k) {
    const double theta = 3.14159265358979323846 * k /
                         static_cast<double>(angle_count - 1);
    v << std::cos(theta), std::sin(theta);
    best = std::min(best, constant_c_quadrature(u, v));
  }
  return best;
}

MonteCarloEstimate estimate_constant_c_noisy(const CovariateModel& model,
                                             double noise_sigma,
                                             double truncation, double r,
                                             const Vector& u, const Vector& v,
                                             std::int64_t samples,
                                             std::uint64_t seed, int jobs) {
  if (u.size() != v.size()) throw DimensionMismatch("u and v sizes differ");
  check_unit(u, "u");
  check_unit(v, "v");
  if (!(noise_sigma > 0.0)) throw InvalidParameter("noise sigma must be positive");
  if (!(truncation > 0.0) || truncation > 1.0 / noise_sigma + 1e-12) {
    throw InvalidParameter("need 0 < truncation <= 1/noise_sigma");
  }
  if (r < 0.0 || r > 1.0 / truncation + 1e-12) {
    throw InvalidParameter("need 0 <= r <= 1/truncation");
  }
  return sharded_mc(
      model, u.size(), samples, seed, jobs,
      [&u, &v, noise_sigma, truncation, r](const Vector& x, Rng& rng) {
        const double noise = noise_sigma * rng.gaussian();
        const double a = std::abs(truncation * (r * u.dot(x) - noise));
        const double xv = v.dot(x);
        const double w = a == 0.0 ? 1.0 : std::min(1.0 / a, 1.0);
        return w * xv * xv;
      });
}

MonteCarloEstimate constant_c_noisy_grid_infimum(double noise_sigma,
                                                 double truncation,
                                                 std::int64_t samples,
                                                 std::uint64_t seed,
                                                 int angle_count, int r_count,
                                                 int jobs) {
  if (angle_count < 2 || r_count < 2) {
    throw InvalidParameter("need at least two grid points per axis");
  }
  Vector u(2), v(2);
  u << 1.0, 0.0;
  MonteCarloEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < angle_count; ++k) {
    const double theta = 3.14159265358979323846 * k /
                         static_cast<double>(angle_count - 1);
    v << std::cos(theta), std::sin(theta);
    for (int j = 0; j < r_count; ++j) {
      const double r =
          (1.0 / truncation) * j / static_cast<double>(r_count - 1);
      const std::uint64_t cell_seed =
          mix64(seed ^ (static_cast<std::uint64_t>(k) << 32 |
                        static_cast<std::uint64_t>(j)));
      MonteCarloEstimate est =
          estimate_constant_c_noisy({}, noise_sigma, truncation, r, u, v,
                                    samples, cell_seed, jobs);
      if (est.value < best.value) {
        best = est;
        best.seed = seed;
      }
    }
  }
  return best;
}

double breakdown_threshold(double c, double eta, bool dense_noise) {
  if (!(c > 0.0)) throw InvalidParameter("constant must be positive");
  if (!(eta >= 1.0)) throw InvalidParameter("eta must be at least 1");
  const double slope = dense_noise ? 5.85 : 2.88;
  return c / (slope * eta + c);
}

LossConvergenceReport loss_convergence_report(const SolverTrace& trace,
                                              const Dataset& data,
                                              const GroundTruth& truth) {
  validate(data);
  if (trace.final_model.size() != data.d()) {
    throw DimensionMismatch("trace model does not match data dimension");
  }
  LossConvergenceReport report;
  const double err = (trace.final_model - truth.gold_model).norm();
  report.epsilon = std::max(err, 1e-15);

  report.scaled_huber_final =
      empirical_scaled_huber(trace.final_model, data, report.epsilon);
  report.scaled_huber_gold =
      empirical_scaled_huber(truth.gold_model, data, report.epsilon);
  const double huber_bound =
      report.scaled_huber_gold + std::sqrt(1.01) * report.epsilon;
  report.scaled_huber_margin = huber_bound - report.scaled_huber_final;
  report.scaled_huber_ok = report.scaled_huber_margin >= -1e-12;

  const auto l1 = [&data](const Vector& w) {
    return residuals(w, data).lpNorm<1>() / static_cast<double>(data.n());
  };
  report.l1_final = l1(trace.final_model);
  report.l1_gold = l1(truth.gold_model);
  const double l1_bound =
      report.l1_gold + 1.5 * std::sqrt(1.01) * report.epsilon;
  report.l1_margin = l1_bound - report.l1_final;
  report.l1_ok = report.l1_margin >= -1e-12;

  report.sandwich_ok =
      report.l1_final <= report.scaled_huber_final + 1e-12 &&
      report.scaled_huber_final <= report.l1_final + 0.5 * report.epsilon +
                                       1e-12;
  return report;
}

}  // namespace stir
