#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stir {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidSpec : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularSystem : std::runtime_error {
  SingularSystem(const std::string& what, double pivot)
      : std::runtime_error(what), smallest_pivot(pivot) {}
  double smallest_pivot;
};

// A regression sample. Covariates are stored column-wise: column i is x_i,
// so the response model is y_i ~ <w, x_i>.
struct Dataset {
  Matrix covariates;  // d x n
  Vector responses;   // n

  Index d() const { return covariates.rows(); }
  Index n() const { return covariates.cols(); }

  // Largest covariate norm, handy as a crude scale estimate.
  double max_column_norm() const { return covariates.colwise().norm().maxCoeff(); }
};

// Throws DimensionMismatch / InvalidParameter on malformed shapes or
// non-finite entries.
Dataset make_dataset(Matrix covariates, Vector responses);
void validate(const Dataset& data);

// Everything the generator knew when it built a corrupted sample. The
// decomposition y = X^T gold_model + corruption + noise holds entrywise.
struct GroundTruth {
  Vector gold_model;                     // w*
  std::vector<Index> corruption_support;  // sorted indices of corrupted points
  Vector corruption_values;               // length n, zero off the support
  Vector dense_noise;                     // length n, all zero when disabled
  std::optional<Vector> fake_model;       // adversary's decoy, when one exists
  double corruption_fraction = 0.0;
  std::uint64_t seed = 0;

  bool is_corrupted(Index i) const;
};

Vector residuals(const Vector& model, const Dataset& data);

// Per-point weights derived from one model's residuals.
struct WeightAssignment {
  Vector weights;       // s, with 0 <= s_i <= truncation
  double truncation;    // M
  Vector source_model;  // the model whose residuals produced s
};

// s_i = min{1/|r_i|, M}. A zero residual yields exactly M; no division by
// zero happens on that path.
WeightAssignment truncated_weights(const Vector& model, const Dataset& data,
                                   double truncation);

// s_i = 1/max{|r_i|, delta}, computed as min{1/|r_i|, 1/delta} so that the
// two parameterizations share one code path and agree bitwise whenever M and
// delta are exact reciprocals.
WeightAssignment regularized_weights(const Vector& model, const Dataset& data,
                                     double delta);

struct SolverConfig {
  double initial_truncation = 1.0;  // M_1
  double increment = 2.0;           // eta, stage growth factor, > 1
  double target_accuracy = 1e-6;    // stop once 1/M_T falls below this
  int max_stages = 64;
  int max_inner_iterations = 50;
  double step_length = 0.9;  // C in (0, 0.99], gradient variant only
  Vector initial_model;      // empty means start from zero
  bool auto_initial_truncation = false;  // pick M_1 by backoff search
  double ridge = 0.0;                    // added to every normal system
};

void validate(const SolverConfig& config, Index d);

// One truncation stage: the weighted refits performed at a fixed M.
struct StageRecord {
  double truncation = 0.0;          // M_T
  std::vector<Vector> iterates;     // inner iterates, in order produced
  std::vector<double> dist_to_gold; // parallel to iterates; empty without truth
  std::vector<double> objective;    // scaled-Huber value at each iterate
  double exit_step_norm = 0.0;      // ||last - second to last||
  bool hit_iteration_cap = false;
  std::int64_t wall_ns = 0;

  int inner_iterations() const { return static_cast<int>(iterates.size()); }
};

struct SolverTrace {
  std::vector<StageRecord> stages;
  Vector final_model;
  bool converged = false;  // false when some inner loop hit its cap
  double increment = 0.0;  // eta the run used
  std::int64_t total_wall_ns = 0;

  double final_dist_to_gold() const;  // NaN when no ground truth was supplied
};

}  // namespace stir
