#include "stir/loss.hpp"

#include <cmath>

namespace stir {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidParameter("epsilon must be positive and finite");
  }
}

void check_anchor(double anchor) {
  if (std::isnan(anchor)) throw InvalidParameter("anchor must not be NaN");
}

}  // namespace

double huber(double x, double epsilon) {
  check_epsilon(epsilon);
  const double a = std::abs(x);
  if (a <= epsilon) return 0.5 * x * x;
  return epsilon * a - 0.5 * epsilon * epsilon;
}

double huber_derivative(double x, double epsilon) {
  check_epsilon(epsilon);
  if (std::abs(x) <= epsilon) return x;
  return x > 0 ? epsilon : -epsilon;
}

double scaled_huber(double x, double epsilon) {
  check_epsilon(epsilon);
  const double a = std::abs(x);
  if (a <= epsilon) return 0.5 * (x * x / epsilon + epsilon);
  return a;
}

double scaled_huber_derivative(double x, double epsilon) {
  check_epsilon(epsilon);
  if (std::abs(x) <= epsilon) return x / epsilon;
  return x > 0 ? 1.0 : -1.0;
}

double majorizer(double x, double anchor, double epsilon) {
  check_epsilon(epsilon);
  check_anchor(anchor);
  const double floor = std::max(std::abs(anchor), epsilon);
  return 0.5 * (x * x / floor + floor);
}

double majorizer_derivative(double x, double anchor, double epsilon) {
  check_epsilon(epsilon);
  check_anchor(anchor);
  return x / std::max(std::abs(anchor), epsilon);
}

double empirical_scaled_huber(const Vector& model, const Dataset& data,
                              double epsilon) {
  check_epsilon(epsilon);
  const Vector r = residuals(model, data);
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i) total += scaled_huber(r[i], epsilon);
  return total / static_cast<double>(r.size());
}

double surrogate(const Vector& model, const Vector& anchor,
                 const Dataset& data, double epsilon) {
  check_epsilon(epsilon);
  const Vector r = residuals(model, data);
  const Vector ra = residuals(anchor, data);
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    total += majorizer(r[i], ra[i], epsilon);
  }
  return total / static_cast<double>(r.size());
}

Vector surrogate_gradient(const Vector& anchor, const Dataset& data,
                          double epsilon) {
  check_epsilon(epsilon);
  const WeightAssignment w =
      truncated_weights(anchor, data, 1.0 / epsilon);
  const Vector r = residuals(anchor, data);
  return data.covariates * (w.weights.cwiseProduct(r)) /
         static_cast<double>(data.n());
}

}  // namespace stir
