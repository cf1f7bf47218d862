#pragma once

#include <Eigen/Dense>

// Central-difference Jacobian of f: R^n -> R^m, used to cross-check the
// analytic derivatives supplied by the library.
template <typename F>
Eigen::MatrixXd finite_difference_jacobian(F f, const Eigen::VectorXd& x,
                                           double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    jac.col(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return jac;
}
