#include "stir/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace stir {

namespace {

Vector unit_gaussian(Index d, Rng& rng) {
  Vector v(d);
  double norm = 0.0;
  do {
    for (Index j = 0; j < d; ++j) v[j] = rng.gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

// Uniform k-subset of [0, n) by partial Fisher-Yates, returned sorted.
std::vector<Index> random_subset(Index n, Index k, Rng& rng) {
  std::vector<Index> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j =
        i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  std::vector<Index> subset(pool.begin(), pool.begin() + k);
  std::sort(subset.begin(), subset.end());
  return subset;
}

void check(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw InvalidSpec("need n >= 1 and d >= 1");
  if (spec.corruption_fraction < 0.0 || spec.corruption_fraction >= 0.5) {
    throw InvalidSpec("corruption fraction must lie in [0, 0.5)");
  }
  if (spec.dense_noise_sigma < 0.0) {
    throw InvalidSpec("noise sigma must be nonnegative");
  }
  const auto& cov = spec.covariates;
  if (cov.kind == CovariateDistribution::NonIsotropicGaussian &&
      cov.covariance.size() > 0 &&
      (cov.covariance.rows() != spec.d || cov.covariance.cols() != spec.d)) {
    throw InvalidSpec("covariance must be d x d");
  }
  if (cov.kind == CovariateDistribution::NonCenteredGaussian &&
      cov.mean.size() > 0 && cov.mean.size() != spec.d) {
    throw InvalidSpec("mean must have length d");
  }
  if (cov.kind == CovariateDistribution::BoundedSphere &&
      !(cov.sphere_radius > 0.0)) {
    throw InvalidSpec("sphere radius must be positive");
  }
}

}  // namespace

CovariateSampler::CovariateSampler(const CovariateModel& model, Index d)
    : kind_(model.kind), d_(d) {
  if (d < 1) throw InvalidSpec("dimension must be at least 1");
  switch (kind_) {
    case CovariateDistribution::IsotropicGaussian:
      break;
    case CovariateDistribution::NonIsotropicGaussian:
      if (model.covariance.size() > 0) {
        if (model.covariance.rows() != d || model.covariance.cols() != d) {
          throw InvalidSpec("covariance must be d x d");
        }
        Eigen::LLT<Matrix> llt(model.covariance);
        if (llt.info() != Eigen::Success) {
          throw InvalidSpec("covariance must be positive definite");
        }
        transform_ = llt.matrixL();
      }
      break;
    case CovariateDistribution::NonCenteredGaussian:
      if (model.mean.size() > 0) {
        if (model.mean.size() != d) throw InvalidSpec("mean must have length d");
        mean_ = model.mean;
      }
      break;
    case CovariateDistribution::BoundedSphere:
      if (!(model.sphere_radius > 0.0)) {
        throw InvalidSpec("sphere radius must be positive");
      }
      radius_ = model.sphere_radius;
      break;
  }
}

Vector CovariateSampler::operator()(Rng& rng) const {
  Vector g(d_);
  for (Index j = 0; j < d_; ++j) g[j] = rng.gaussian();
  switch (kind_) {
    case CovariateDistribution::IsotropicGaussian:
      return g;
    case CovariateDistribution::NonIsotropicGaussian:
      if (transform_.size() == 0) return g;
      return transform_ * g;
    case CovariateDistribution::NonCenteredGaussian:
      if (mean_.size() == 0) return g;
      return g + mean_;
    case CovariateDistribution::BoundedSphere: {
      double norm = g.norm();
      while (norm == 0.0) {
        for (Index j = 0; j < d_; ++j) g[j] = rng.gaussian();
        norm = g.norm();
      }
      return radius_ / norm * g;
    }
  }
  throw InvalidSpec("unknown covariate distribution");
}

Vector sample_covariate(const CovariateModel& model, Index d, Rng& rng) {
  return CovariateSampler(model, d)(rng);
}

std::pair<Dataset, GroundTruth> generate(const GeneratorSpec& spec) {
  check(spec);
  Rng rng(spec.seed);

  GroundTruth truth;
  truth.seed = spec.seed;
  truth.corruption_fraction = spec.corruption_fraction;
  truth.gold_model = unit_gaussian(spec.d, rng);
  if (spec.corruption_mode == CorruptionMode::FakeModel) {
    truth.fake_model = unit_gaussian(spec.d, rng);
  }

  // The corrupted subset is fixed before any covariate exists, so the
  // adversary cannot aim at particular draws.
  const Index bad = static_cast<Index>(
      std::floor(spec.corruption_fraction * static_cast<double>(spec.n)));
  truth.corruption_support = random_subset(spec.n, bad, rng);

  const CovariateSampler sample(spec.covariates, spec.d);
  Matrix X(spec.d, spec.n);
  for (Index i = 0; i < spec.n; ++i) X.col(i) = sample(rng);

  truth.dense_noise = Vector::Zero(spec.n);
  if (spec.dense_noise_sigma > 0.0) {
    for (Index i = 0; i < spec.n; ++i) {
      if (!truth.is_corrupted(i)) {
        truth.dense_noise[i] = spec.dense_noise_sigma * rng.gaussian();
      }
    }
  }

  truth.corruption_values = Vector::Zero(spec.n);
  Vector y(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    const double clean = X.col(i).dot(truth.gold_model);
    if (!truth.is_corrupted(i)) {
      y[i] = clean + truth.dense_noise[i];
      continue;
    }
    switch (spec.corruption_mode) {
      case CorruptionMode::FakeModel: {
        // Response read straight off the decoy so the planted residual
        // is exactly zero there.
        const double faked = X.col(i).dot(*truth.fake_model);
        truth.corruption_values[i] = faked - clean;
        y[i] = faked;
        break;
      }
      case CorruptionMode::IidHeavy:
        truth.corruption_values[i] = rng.cauchy() * truth.gold_model.norm();
        y[i] = clean + truth.corruption_values[i];
        break;
      case CorruptionMode::ConstantOffset:
        truth.corruption_values[i] = spec.constant_offset;
        y[i] = clean + truth.corruption_values[i];
        break;
    }
  }

  return {make_dataset(std::move(X), std::move(y)), std::move(truth)};
}

Dataset pair_and_center(const Dataset& data) {
  validate(data);
  const Index m = data.n() / 2;
  if (m < 1) throw InvalidSpec("need at least two points to pair");
  const double scale = 1.0 / std::sqrt(2.0);
  Matrix X(data.d(), m);
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    X.col(i) = (data.covariates.col(i) - data.covariates.col(i + m)) * scale;
    y[i] = (data.responses[i] - data.responses[i + m]) * scale;
  }
  return Dataset{std::move(X), std::move(y)};
}

std::pair<Dataset, Vector> center_covariates(const Dataset& data) {
  validate(data);
  const Vector mean = data.covariates.rowwise().mean();
  Matrix X = data.covariates.colwise() - mean;
  return {Dataset{std::move(X), data.responses}, mean};
}

}  // namespace stir
