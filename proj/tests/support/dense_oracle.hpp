#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fgpe/factor_graph.hpp"
#include "support/finite_diff.hpp"

// Reference solver used only by tests. It shares the residual definitions
// with the library (those are pinned against hand-computed values) but
// nothing else: Jacobians come from central differences, the normal
// equations are dense, and the iteration is a plain damped Gauss-Newton.
// Agreement between this and the sparse analytic solver is the evidence
// that the analytic Jacobians and the sparse path are right.
namespace oracle {

struct DenseSystem {
  std::vector<fgpe::VariableKey> order;
  std::map<fgpe::VariableKey, int> index;
};

inline DenseSystem variable_order(const fgpe::Values& values) {
  DenseSystem sys;
  for (const auto& [key, pose] : values) {
    sys.index[key] = static_cast<int>(sys.order.size());
    sys.order.push_back(key);
  }
  return sys;
}

inline Eigen::VectorXd pack(const fgpe::Values& values, const DenseSystem& sys) {
  Eigen::VectorXd x(3 * sys.order.size());
  for (std::size_t i = 0; i < sys.order.size(); ++i) {
    const fgpe::Pose2& p = values.at(sys.order[i]);
    x.segment<3>(3 * i) << p.x, p.y, p.theta;
  }
  return x;
}

inline fgpe::Values unpack(const Eigen::VectorXd& x, const DenseSystem& sys) {
  fgpe::Values values;
  for (std::size_t i = 0; i < sys.order.size(); ++i)
    values[sys.order[i]] =
        fgpe::Pose2{x[3 * i], x[3 * i + 1], fgpe::wrap_angle(x[3 * i + 2])};
  return values;
}

inline Eigen::VectorXd stacked_residual(const fgpe::FactorGraph& g,
                                        const fgpe::Values& values) {
  int rows = 0;
  for (const auto& f : g.factors())
    if (!f.spent) rows += f.residual_dim();
  Eigen::VectorXd r(rows);
  int row = 0;
  for (const auto& f : g.factors()) {
    if (f.spent) continue;
    r.segment(row, f.residual_dim()) = fgpe::residual(f, values);
    row += f.residual_dim();
  }
  return r;
}

inline Eigen::MatrixXd fd_jacobian(const fgpe::FactorGraph& g, const fgpe::Values& values,
                                   const DenseSystem& sys, double h = 1e-7) {
  const Eigen::VectorXd x0 = pack(values, sys);
  return finite_difference_jacobian(
      [&](const Eigen::VectorXd& x) { return stacked_residual(g, unpack(x, sys)); }, x0,
      h);
}

struct DenseResult {
  fgpe::Values values;
  double cost = 0.0;
  bool converged = false;
};

inline DenseResult dense_solve(const fgpe::FactorGraph& g, int max_iters = 200) {
  const DenseSystem sys = variable_order(g.values());
  fgpe::Values values = g.values();
  double cost = stacked_residual(g, values).squaredNorm();
  double lambda = 1e-4;

  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::MatrixXd jac = fd_jacobian(g, values, sys);
    const Eigen::VectorXd r = stacked_residual(g, values);
    const Eigen::MatrixXd h =
        jac.transpose() * jac +
        lambda * Eigen::MatrixXd::Identity(jac.cols(), jac.cols());
    const Eigen::VectorXd dx = h.ldlt().solve(-jac.transpose() * r);
    const fgpe::Values candidate = unpack(pack(values, sys) + dx, sys);
    const double new_cost = stacked_residual(g, candidate).squaredNorm();
    if (new_cost < cost) {
      const bool tiny_step = dx.lpNorm<Eigen::Infinity>() < 1e-10;
      const bool tiny_gain = (cost - new_cost) < 1e-12 * std::max(cost, 1.0);
      values = candidate;
      cost = new_cost;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (tiny_step || tiny_gain) return {values, cost, true};
    } else {
      if (dx.lpNorm<Eigen::Infinity>() < 1e-10) return {values, cost, true};
      lambda *= 10.0;
      if (lambda > 1e10) return {values, cost, true};
    }
  }
  return {values, cost, false};
}

// Dense covariance of one variable: 3x3 block of (J^T J)^{-1} with J from
// central differences at the given values.
inline Eigen::Matrix3d dense_marginal(const fgpe::FactorGraph& g,
                                      const fgpe::Values& values,
                                      const fgpe::VariableKey& key) {
  const DenseSystem sys = variable_order(values);
  const Eigen::MatrixXd jac = fd_jacobian(g, values, sys);
  const Eigen::MatrixXd info = jac.transpose() * jac;
  const Eigen::MatrixXd cov = info.inverse();
  const int i = 3 * sys.index.at(key);
  return cov.block<3, 3>(i, i);
}

}  // namespace oracle
