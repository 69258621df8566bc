#pragma once

#include "stir/core.hpp"

namespace stir {

// One weighted least-squares instance: minimize sum_i s_i (<w, x_i> - y_i)^2,
// optionally with ridge added to the normal matrix diagonal.
struct WlsProblem {
  const Dataset& data;
  const Vector& weights;
  double ridge = 0.0;
};

// Exact minimizer through an SPD factorization of the normal equations
// X S X^T w = X S y, with one refinement pass. Throws SingularSystem (carrying
// the smallest pivot) when the factorization is not usably positive definite.
Vector wls_solve(const WlsProblem& problem);

// Plain least squares, i.e. unit weights.
Vector ols(const Dataset& data);

// Weighted refits at one fixed truncation level until the iterates stop
// moving (step norm <= target_accuracy) or the iteration cap hits.
SolverTrace irls_fixed(const Dataset& data, double truncation,
                       const SolverConfig& config,
                       const GroundTruth* truth = nullptr);

// Stagewise-truncated IRLS. Each stage runs weighted refits at truncation M_T
// with exit threshold 2/(eta M_T) on the step norm, then tightens
// M_{T+1} = eta M_T. Stages stop once 1/M_T <= target_accuracy.
// Every stage performs at least one refit before testing the threshold.
SolverTrace stir(const Dataset& data, const SolverConfig& config,
                 const GroundTruth* truth = nullptr);

// Gradient variant: inner updates w <- w - (2C/(M_T n)) X S r instead of the
// exact weighted solve. Same staging and exit rules as stir().
SolverTrace stir_gd(const Dataset& data, const SolverConfig& config,
                    const GroundTruth* truth = nullptr);

// Hard-thresholding baseline: alternate a least-squares fit on the active set
// with reselecting the ceil((1-alpha_hat) n) smallest-residual points.
// Ties in |r| break toward the lower index.
SolverTrace torrent(const Dataset& data, double alpha_hat,
                    const SolverConfig& config,
                    const GroundTruth* truth = nullptr);

// Gradient version of the same: w <- w - step (2/n) X_A r_A on the current
// active set, reselecting the set after each step.
SolverTrace torrent_gd(const Dataset& data, double alpha_hat,
                       const SolverConfig& config,
                       const GroundTruth* truth = nullptr);

// Backoff search for a safe starting truncation: begin at the 1/||w0|| scale
// and halve until the first stage visibly contracts the residual scale.
// Falls back to config.initial_truncation when nothing is accepted.
double auto_initial_truncation(const Dataset& data, const SolverConfig& config);

}  // namespace stir
