#pragma once

#include "stir/core.hpp"
#include "stir/rng.hpp"

#include <utility>

namespace stir {

enum class CovariateDistribution {
  IsotropicGaussian,
  NonIsotropicGaussian,  // zero mean, given covariance
  NonCenteredGaussian,   // identity covariance, given mean
  BoundedSphere,         // uniform on the sphere of given radius
};

// Which covariate law to draw from, plus its shape parameters. Unused
// parameters may stay empty.
struct CovariateModel {
  CovariateDistribution kind = CovariateDistribution::IsotropicGaussian;
  Matrix covariance;          // NonIsotropicGaussian; empty means identity
  Vector mean;                // NonCenteredGaussian; empty means zero
  double sphere_radius = 1.0; // BoundedSphere
};

// Prepares a draw-ready sampler; covariance factoring happens once here.
// Throws InvalidSpec on malformed shape parameters.
class CovariateSampler {
 public:
  CovariateSampler(const CovariateModel& model, Index d);
  Vector operator()(Rng& rng) const;
  Index dimension() const { return d_; }

 private:
  CovariateDistribution kind_;
  Index d_;
  Matrix transform_;  // Cholesky factor for the correlated case
  Vector mean_;
  double radius_ = 1.0;
};

Vector sample_covariate(const CovariateModel& model, Index d, Rng& rng);

enum class CorruptionMode {
  FakeModel,       // corrupted responses read exactly from a decoy model
  IidHeavy,        // heavy-tailed additive junk (Cauchy scaled by ||w*||)
  ConstantOffset,  // one fixed additive offset on every corrupted point
};

struct GeneratorSpec {
  Index n = 1000;
  Index d = 10;
  CovariateModel covariates;
  double corruption_fraction = 0.0;  // alpha in [0, 0.5)
  CorruptionMode corruption_mode = CorruptionMode::FakeModel;
  double dense_noise_sigma = 0.0;    // zero disables dense noise
  double constant_offset = 5.0;      // ConstantOffset magnitude
  std::uint64_t seed = 0;
};

// Draws gold and decoy models (unit norm), picks the corrupted subset of size
// floor(alpha n) before any covariate is drawn, then fills in covariates,
// corruption, and noise. Dense noise lands on clean points only; on corrupted
// points the adversary overwrites the response outright.
std::pair<Dataset, GroundTruth> generate(const GeneratorSpec& spec);

// Differencing trick for unknown-mean covariates: point i of the output is
// (x_i - x_{i+n/2})/sqrt(2) with responses treated the same way. An odd
// trailing point is dropped. At most doubles the corrupted fraction.
Dataset pair_and_center(const Dataset& data);

// Subtracts the empirical covariate mean; returns it alongside.
std::pair<Dataset, Vector> center_covariates(const Dataset& data);

}  // namespace stir
