#pragma once

#include "stir/core.hpp"
#include "stir/datagen.hpp"

#include <cstdint>

namespace stir {

// Spectrum of the weighted Gram matrix X_G S X_G^T over the clean points.
// The normalized figures divide by M |G| so a healthy design sits near 1.
struct SpectralReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double normalized_min = 0.0;
  double normalized_max = 0.0;
  double truncation = 0.0;
  Index good_count = 0;
};

SpectralReport wsc_wss_report(const Dataset& data, const GroundTruth& truth,
                              const WeightAssignment& weights);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo estimate of E[min{1/|<u,x>|, 1} <x,v>^2] for unit u, v.
// Sharded deterministically, so the result does not depend on jobs.
MonteCarloEstimate estimate_constant_c(const CovariateModel& model,
                                       const Vector& u, const Vector& v,
                                       std::int64_t samples,
                                       std::uint64_t seed, int jobs = 1);

// Same quantity for isotropic Gaussian covariates by deterministic 1-D
// quadrature of its two-coordinate reduction. No sampling error.
double constant_c_quadrature(const Vector& u, const Vector& v);

// Infimum of the quadrature value over a uniform grid of directions v
// relative to u (rotation invariance collapses the rest).
double constant_c_grid_infimum(int angle_count = 33);

// Noisy-regime analogue: E[min{1/|M r <u,x> - M e|, 1} <x,v>^2] with
// e ~ N(0, noise_sigma^2). Requires 0 <= r <= 1/M and M <= 1/noise_sigma.
MonteCarloEstimate estimate_constant_c_noisy(const CovariateModel& model,
                                             double noise_sigma,
                                             double truncation, double r,
                                             const Vector& u, const Vector& v,
                                             std::int64_t samples,
                                             std::uint64_t seed, int jobs = 1);

// Grid infimum over (angle, r) at fixed truncation and noise level.
MonteCarloEstimate constant_c_noisy_grid_infimum(double noise_sigma,
                                                 double truncation,
                                                 std::int64_t samples,
                                                 std::uint64_t seed,
                                                 int angle_count = 33,
                                                 int r_count = 17,
                                                 int jobs = 1);

// Largest guaranteed-recoverable corruption fraction for a given constant c
// and stage factor eta: c/(2.88 eta + c), or c/(5.85 eta + c) with dense
// noise. eta = 1 evaluates the limiting (tightest) threshold.
double breakdown_threshold(double c, double eta, bool dense_noise = false);

// How a finished run's loss compares against the gold model, at the scale
// epsilon = achieved parameter error.
struct LossConvergenceReport {
  double epsilon = 0.0;           // ||final - gold||, floored at 1e-15
  double scaled_huber_final = 0.0;
  double scaled_huber_gold = 0.0;
  double scaled_huber_margin = 0.0;  // bound - final, >= 0 when satisfied
  bool scaled_huber_ok = false;
  double l1_final = 0.0;          // (1/n) ||X^T w - y||_1
  double l1_gold = 0.0;
  double l1_margin = 0.0;
  bool l1_ok = false;
  bool sandwich_ok = false;       // l1 <= scaled huber <= l1 + epsilon/2
};

LossConvergenceReport loss_convergence_report(const SolverTrace& trace,
                                              const Dataset& data,
                                              const GroundTruth& truth);

}  // namespace stir
