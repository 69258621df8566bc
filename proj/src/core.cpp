#include "stir/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stir {

void validate(const Dataset& data) {
  if (data.covariates.rows() < 1 || data.covariates.cols() < 1) {
    throw DimensionMismatch("dataset needs at least one point and one feature");
  }
  if (data.responses.size() != data.covariates.cols()) {
    throw DimensionMismatch("response count does not match covariate columns");
  }
  if (!data.covariates.allFinite() || !data.responses.allFinite()) {
    throw InvalidParameter("dataset contains non-finite entries");
  }
}

Dataset make_dataset(Matrix covariates, Vector responses) {
  Dataset data{std::move(covariates), std::move(responses)};
  validate(data);
  return data;
}

bool GroundTruth::is_corrupted(Index i) const {
  return std::binary_search(corruption_support.begin(),
                            corruption_support.end(), i);
}

Vector residuals(const Vector& model, const Dataset& data) {
  if (model.size() != data.d()) {
    throw DimensionMismatch("model dimension does not match covariates");
  }
  return data.covariates.transpose() * model - data.responses;
}

namespace {

// Shared kernel for both weight parameterizations: s_i = min{1/|r_i|, cap}.
WeightAssignment capped_inverse_weights(const Vector& model,
                                        const Dataset& data, double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap)) {
    throw InvalidParameter("weight cap must be positive and finite");
  }
  const Vector r = residuals(model, data);
  Vector s(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    s[i] = (a == 0.0) ? cap : std::min(1.0 / a, cap);
  }
  return WeightAssignment{std::move(s), cap, model};
}

}  // namespace

WeightAssignment truncated_weights(const Vector& model, const Dataset& data,
                                   double truncation) {
  return capped_inverse_weights(model, data, truncation);
}

WeightAssignment regularized_weights(const Vector& model, const Dataset& data,
                                     double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidParameter("regularization floor must be positive and finite");
  }
  return capped_inverse_weights(model, data, 1.0 / delta);
}

void validate(const SolverConfig& config, Index d) {
  if (!(config.initial_truncation > 0.0)) {
    throw InvalidParameter("initial truncation must be positive");
  }
  if (!(config.increment > 1.0)) {
    throw InvalidParameter("stage increment must exceed 1");
  }
  if (!(config.target_accuracy > 0.0)) {
    throw InvalidParameter("target accuracy must be positive");
  }
  if (config.max_stages < 1 || config.max_inner_iterations < 1) {
    throw InvalidParameter("iteration limits must be at least 1");
  }
  if (!(config.step_length > 0.0) || config.step_length > 0.99) {
    throw InvalidParameter("step length must lie in (0, 0.99]");
  }
  if (config.ridge < 0.0) {
    throw InvalidParameter("ridge must be nonnegative");
  }
  if (config.initial_model.size() != 0 && config.initial_model.size() != d) {
    throw DimensionMismatch("initial model dimension does not match data");
  }
}

double SolverTrace::final_dist_to_gold() const {
  for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
    if (!it->dist_to_gold.empty()) return it->dist_to_gold.back();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace stir
