#include "exportcast/logistic.hpp"

namespace exportcast {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double logistic_objective(const Matrix& x, const BinaryVector& y, const Vector& w,
                          double b, double l2) {
  const Vector z = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += y(i) ? softplus(-z(i)) : softplus(z(i));
  }
  return loss + 0.5 * l2 * w.squaredNorm();
}

LogisticModel fit_logistic(const Matrix& x, const BinaryVector& y,
                           const LogisticParams& params) {
  if (x.rows() == 0) throw ValidationError("cannot fit a logistic model on an empty set");
  if (x.rows() != y.size()) throw ValidationError("feature and label lengths differ");
  if (params.l2 < 0.0) throw ValidationError("l2 must be >= 0");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();

  LogisticModel model;
  model.params = params;
  model.weights = Vector::Zero(p);
  // Augmented design [x, 1] so the intercept is the last coefficient.
  Matrix design(n, p + 1);
  design.leftCols(p) = x;
  design.col(p).setOnes();
  Vector theta = Vector::Zero(p + 1);
  const Vector yd = y.cast<double>();
  Vector penalty = Vector::Constant(p + 1, params.l2);
  penalty(p) = 0.0;

  auto objective = [&](const Vector& t) {
    return logistic_objective(x, y, t.head(p), t(p), params.l2);
  };
  double current = objective(theta);
  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    const Vector prob = (design * theta).unaryExpr([](double z) { return sigmoid(z); });
    const Vector grad =
        design.transpose() * (prob - yd) + penalty.cwiseProduct(theta);
    const Vector curvature = prob.cwiseProduct((1.0 - prob.array()).matrix());
    Matrix hessian = design.transpose() * curvature.asDiagonal() * design;
    hessian.diagonal() += penalty;
    // A small ridge keeps the unpenalized intercept direction solvable.
    hessian.diagonal().array() += 1e-12;
    const Vector step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    Vector candidate = theta - step;
    double next = objective(candidate);
    while (!(next <= current) && scale > 1e-10) {
      scale *= 0.5;
      candidate = theta - scale * step;
      next = objective(candidate);
    }
    model.iterations = iter + 1;
    if (!(next <= current)) {
      model.converged = true;  // no descent direction left
      break;
    }
    const double improvement = current - next;
    theta = candidate;
    current = next;
    if (improvement < params.tol) {
      model.converged = true;
      break;
    }
  }
  model.weights = theta.head(p);
  model.intercept = theta(p);
  return model;
}

LogisticModel fit_logistic(const SupervisedSet& set, const LogisticParams& params) {
  if (set.size() == 0) throw ValidationError("cannot fit a logistic model on an empty set");
  return fit_logistic(set.x(), set.labels, params);
}

}  // namespace exportcast
