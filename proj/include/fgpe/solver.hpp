#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/factor_graph.hpp"

namespace fgpe {

struct LmConfig {
  int max_iterations = 50;
  double lambda_init = 1e-4;
  double lambda_min = 1e-12;
  double lambda_max = 1e8;
  double tol_dx = 1e-8;        // infinity norm of the update step
  double tol_cost_rel = 1e-9;  // relative cost decrease
  // Variables at earlier timesteps are held constant (sliding-window mode).
  int min_free_timestep = std::numeric_limits<int>::min();
};

struct SolveStats {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;      // outer (linearization) rounds
  int accepted_steps = 0;  // updates that lowered the cost
  double lambda_final = 0.0;
  bool converged = false;
  std::string termination;  // "tol_dx" | "tol_cost" | "max_iterations" | "no_improvement"
};

/// Weighted Jacobian and residual of the graph at `values`. Columns cover the
/// free variables only, in map (chronological) order; the normal equations
/// J^T J dx = -J^T r stay near-banded under that ordering.
struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd residuals;
  std::vector<VariableKey> order;           // column block i covers [3i, 3i+3)
  std::map<VariableKey, int> block_index;
};

namespace detail {

inline bool is_free(const VariableKey& k, int min_free_timestep) {
  return k.timestep >= min_free_timestep;
}

// Spent factors no longer shape the objective, and factors whose keys are
// all frozen contribute a constant; skip both.
inline bool factor_active(const Factor& f, int min_free_timestep) {
  if (f.spent) return false;
  for (int i = 0; i < f.num_keys; ++i)
    if (is_free(f.keys[i], min_free_timestep)) return true;
  return false;
}

}  // namespace detail

/// Sum of squared residuals over factors touching at least one free variable.
/// Differs from FactorGraph::total_cost by a constant, so the minimizer is
/// the same; the solver uses it so frozen history costs nothing to evaluate.
inline double active_cost(const FactorGraph& g, const Values& values,
                          int min_free_timestep = std::numeric_limits<int>::min()) {
  double c = 0.0;
  for (const auto& f : g.factors())
    if (detail::factor_active(f, min_free_timestep))
      c += evaluate_factor(f, values).squaredNorm();
  return c;
}

inline LinearSystem linearize(const FactorGraph& g, const Values& values,
                              int min_free_timestep = std::numeric_limits<int>::min()) {
  LinearSystem sys;
  for (const auto& [key, pose] : values)
    if (detail::is_free(key, min_free_timestep)) {
      sys.block_index[key] = static_cast<int>(sys.order.size());
      sys.order.push_back(key);
    }

  int rows = 0;
  for (const auto& f : g.factors())
    if (detail::factor_active(f, min_free_timestep)) rows += f.residual_dim();

  sys.residuals.resize(rows);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rows) * 6);

  int row = 0;
  std::array<Eigen::Matrix<double, 3, 3>, 2> jac;
  for (const auto& f : g.factors()) {
    if (!detail::factor_active(f, min_free_timestep)) continue;
    const Eigen::VectorXd r = evaluate_factor(f, values, &jac);
    const int dim = f.residual_dim();
    sys.residuals.segment(row, dim) = r;
    for (int k = 0; k < f.num_keys; ++k) {
      auto it = sys.block_index.find(f.keys[k]);
      if (it == sys.block_index.end()) continue;  // frozen key: constant
      const int col0 = 3 * it->second;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < 3; ++j)
          if (jac[k](i, j) != 0.0) triplets.emplace_back(row + i, col0 + j, jac[k](i, j));
    }
    row += dim;
  }

  sys.jacobian.resize(rows, 3 * static_cast<int>(sys.order.size()));
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

namespace detail {

// A zero column of J means the corresponding coordinate is unconstrained and
// the undamped normal equations are singular no matter the damping history.
inline void check_free_coordinates(const LinearSystem& sys) {
  for (int c = 0; c < sys.jacobian.cols(); ++c) {
    if (sys.jacobian.col(c).squaredNorm() == 0.0) {
      static const char axis[3] = {'x', 'y', 't'};
      const VariableKey& key = sys.order[c / 3];
      throw SingularSystem("unconstrained coordinate " + std::string(1, axis[c % 3]) +
                           " of " + to_string(key));
    }
  }
}

inline Values apply_step(const Values& values, const LinearSystem& sys,
                         const Eigen::VectorXd& dx) {
  Values out = values;
  for (std::size_t i = 0; i < sys.order.size(); ++i) {
    Pose2& p = out[sys.order[i]];
    p.x += dx[3 * i + 0];
    p.y += dx[3 * i + 1];
    p.theta = wrap_angle(p.theta + dx[3 * i + 2]);
  }
  return out;
}

}  // namespace detail

/// Levenberg-Marquardt over the graph's values (updated in place on success).
/// Accepted steps strictly decrease the active cost; the damping parameter is
/// divided by 10 on acceptance and multiplied by 10 on rejection.
inline SolveStats optimize(FactorGraph& g, const LmConfig& cfg = {}) {
  SolveStats stats;
  Values values = g.values();
  double cost = active_cost(g, values, cfg.min_free_timestep);
  stats.initial_cost = cost;
  double lambda = cfg.lambda_init;

  Eigen::SparseMatrix<double> identity;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::NaturalOrdering<int>>
      ldlt;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    ++stats.iterations;
    const LinearSystem sys = linearize(g, values, cfg.min_free_timestep);
    if (sys.order.empty()) {
      stats.converged = true;
      stats.termination = "no_improvement";
      break;
    }
    detail::check_free_coordinates(sys);

    const Eigen::SparseMatrix<double> hessian =
        (Eigen::SparseMatrix<double>(sys.jacobian.transpose()) * sys.jacobian).pruned();
    const Eigen::VectorXd gradient = sys.jacobian.transpose() * sys.residuals;
    if (identity.rows() != hessian.rows()) {
      identity.resize(hessian.rows(), hessian.cols());
      identity.setIdentity();
    }

    bool accepted = false;
    bool stop = false;
    while (true) {
      const Eigen::SparseMatrix<double> damped = hessian + lambda * identity;
      ldlt.compute(damped);
      if (ldlt.info() != Eigen::Success) {
        if (lambda >= cfg.lambda_max)
          throw SingularSystem("normal equations not factorizable at maximum damping");
        lambda = std::min(lambda * 10.0, cfg.lambda_max);
        continue;
      }
      const Eigen::VectorXd dx = ldlt.solve(-gradient);
      if (ldlt.info() != Eigen::Success) {
        if (lambda >= cfg.lambda_max)
          throw SingularSystem("normal equations not solvable at maximum damping");
        lambda = std::min(lambda * 10.0, cfg.lambda_max);
        continue;
      }
      const double step_norm = dx.lpNorm<Eigen::Infinity>();
      const Values candidate = detail::apply_step(values, sys, dx);
      const double new_cost = active_cost(g, candidate, cfg.min_free_timestep);

      if (new_cost < cost) {
        const double decrease = cost - new_cost;
        values = candidate;
        ++stats.accepted_steps;
        accepted = true;
        lambda = std::max(lambda / 10.0, cfg.lambda_min);
        if (step_norm < cfg.tol_dx) {
          stats.termination = "tol_dx";
          stop = true;
        } else if (decrease <= cfg.tol_cost_rel * std::max(cost, 1.0)) {
          stats.termination = "tol_cost";
          stop = true;
        }
        cost = new_cost;
        break;
      }
      // Rejected: a vanishing step cannot improve under more damping either.
      if (step_norm < cfg.tol_dx) {
        stats.termination = "tol_dx";
        stop = true;
        break;
      }
      if (lambda >= cfg.lambda_max) {
        stats.termination = "no_improvement";
        stop = true;
        break;
      }
      lambda = std::min(lambda * 10.0, cfg.lambda_max);
    }

    if (stop) {
      stats.converged = true;
      break;
    }
    if (!accepted) {
      stats.converged = true;
      stats.termination = "no_improvement";
      break;
    }
  }

  if (stats.termination.empty()) {
    stats.termination = "max_iterations";
    stats.converged = false;
  }
  stats.final_cost = cost;
  stats.lambda_final = lambda;
  g.values() = values;
  return stats;
}

/// 3x3 covariance block of one variable: the corresponding block of the
/// inverse of the undamped J^T J, linearized at the current values. Obtained
/// by solving three right-hand-side columns, not by forming the full inverse.
inline Eigen::Matrix3d marginal_covariance(
    const FactorGraph& g, const VariableKey& key,
    int min_free_timestep = std::numeric_limits<int>::min()) {
  const LinearSystem sys = linearize(g, g.values(), min_free_timestep);
  auto it = sys.block_index.find(key);
  if (it == sys.block_index.end())
    throw UnknownVariable("no free variable " + to_string(key) + " to marginalize");
  detail::check_free_coordinates(sys);

  const Eigen::SparseMatrix<double> hessian =
      (Eigen::SparseMatrix<double>(sys.jacobian.transpose()) * sys.jacobian).pruned();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::NaturalOrdering<int>>
      ldlt(hessian);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystem("information matrix not factorizable for marginals");

  const int col0 = 3 * it->second;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(hessian.rows(), 3);
  rhs(col0 + 0, 0) = 1.0;
  rhs(col0 + 1, 1) = 1.0;
  rhs(col0 + 2, 2) = 1.0;
  const Eigen::MatrixXd cols = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystem("information matrix not solvable for marginals");

  Eigen::Matrix3d cov = cols.block<3, 3>(col0, 0);
  return 0.5 * (cov + cov.transpose());  // symmetrize away round-off skew
}

inline constexpr double kPsdTolerance = -1e-12;

/// Area of the 1-sigma position uncertainty ellipse: pi times the product of
/// the singular axes of the xy covariance block. Eigenvalues inside the
/// numerical tolerance band are clamped to zero; anything more negative is an
/// invalid covariance and raises NotPsd.
inline double ellipse_area(const Eigen::Matrix3d& covariance) {
  const Eigen::Matrix2d xy = covariance.topLeftCorner<2, 2>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(xy);
  Eigen::Vector2d lam = eig.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (lam[i] < kPsdTolerance)
      throw NotPsd("covariance eigenvalue " + std::to_string(lam[i]) + " below tolerance");
    lam[i] = std::max(lam[i], 0.0);
  }
  return kPi * std::sqrt(lam[0] * lam[1]);
}

}  // namespace fgpe
