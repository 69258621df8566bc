#pragma once

#include "stir/core.hpp"

namespace stir {

// The scale parameter and its reciprocal weight cap travel together:
// epsilon = 1/M up to one floating-point reciprocal.
struct ScaledHuberParams {
  double epsilon;

  double truncation() const { return 1.0 / epsilon; }
  static ScaledHuberParams from_truncation(double truncation) {
    return {1.0 / truncation};
  }
};

// Classical Huber: quadratic inside [-epsilon, epsilon], linear outside.
double huber(double x, double epsilon);
double huber_derivative(double x, double epsilon);

// Scaled variant f(x) = huber(x)/epsilon + epsilon/2. Smooth approximation of
// |x| from above: |x| <= f(x) <= |x| + epsilon/2.
double scaled_huber(double x, double epsilon);
double scaled_huber_derivative(double x, double epsilon);

// Quadratic upper bound on the scaled Huber anchored at a:
// g(x; a) = (x^2 / max{|a|, epsilon} + max{|a|, epsilon}) / 2.
// Touches f at the anchor and dominates it everywhere.
double majorizer(double x, double anchor, double epsilon);
double majorizer_derivative(double x, double anchor, double epsilon);

// Mean scaled-Huber loss over the whole sample, (1/n) sum_i f(r_i).
double empirical_scaled_huber(const Vector& model, const Dataset& data,
                              double epsilon);

// Mean anchored majorizer, (1/n) sum_i g(r_i(model); r_i(anchor)). Agrees
// with the loss at model == anchor and upper-bounds it everywhere.
double surrogate(const Vector& model, const Vector& anchor, const Dataset& data,
                 double epsilon);

// Gradient of the surrogate at its anchor, which is also the loss gradient
// there: (1/n) X S r with the weights capped at 1/epsilon.
Vector surrogate_gradient(const Vector& anchor, const Dataset& data,
                          double epsilon);

}  // namespace stir
