#pragma once

#include "exportcast/boosting.hpp"
#include "exportcast/dataset.hpp"

namespace exportcast {

struct LogisticParams {
  double l2 = 1.0;
  std::size_t max_iter = 100;
  double tol = 1e-10;
};

struct LogisticModel {
  LogisticParams params;
  Vector weights;
  double intercept = 0.0;
  bool converged = false;
  std::size_t iterations = 0;

  template <typename Row>
  double predict(const Row& x) const {
    return sigmoid(x.dot(weights) + intercept);
  }
};

// Objective minimized by fit_logistic: summed log-loss plus l2/2 * |w|^2.
// The intercept is not penalized.
double logistic_objective(const Matrix& x, const BinaryVector& y, const Vector& w,
                          double b, double l2);

// Damped Newton iterations on the objective above. Stops once the objective
// improves by less than `tol`; `converged` is false when max_iter ran out
// first.
LogisticModel fit_logistic(const SupervisedSet& set, const LogisticParams& params);
LogisticModel fit_logistic(const Matrix& x, const BinaryVector& y,
                           const LogisticParams& params);

}  // namespace exportcast
