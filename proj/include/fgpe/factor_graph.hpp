#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/geometry.hpp"

namespace fgpe {

/// Floor on the separation used in measurement-Jacobian denominators.
/// Estimated poses can drift arbitrarily close together (the planning factor
/// actively pulls them together), and an unfloored 1/r row would then inject
/// unbounded information and make the normal equations indefinite in floating
/// point. One millimetre is far below any physically meaningful separation
/// for robots with bodies tens of centimetres across.
inline constexpr double kMinLinearizationRange = 1e-3;

enum class AgentKind : int { Evader = 0, Pursuer = 1 };

/// Identifies one pose variable: which agent, and at which timestep.
struct VariableKey {
  AgentKind agent_kind = AgentKind::Evader;
  int agent_id = 0;  // always 0 for the evader
  int timestep = 0;

  friend bool operator==(const VariableKey&, const VariableKey&) = default;
  // Chronological first, evader before pursuers within a step.
  friend auto operator<=>(const VariableKey& a, const VariableKey& b) {
    return std::tie(a.timestep, a.agent_kind, a.agent_id) <=>
           std::tie(b.timestep, b.agent_kind, b.agent_id);
  }
};

inline VariableKey evader_key(int timestep) { return {AgentKind::Evader, 0, timestep}; }
inline VariableKey pursuer_key(int id, int timestep) {
  return {AgentKind::Pursuer, id, timestep};
}

inline std::string to_string(const VariableKey& k) {
  return std::string(k.agent_kind == AgentKind::Evader ? "evader" : "pursuer") + "/" +
         std::to_string(k.agent_id) + "@" + std::to_string(k.timestep);
}

/// Per-axis standard deviations of every factor family. The information
/// matrix of a factor is diag(1/sigma^2) over the axes it uses.
struct InformationWeights {
  double sigma_dx = 0.1;        // m, dynamics x
  double sigma_dy = 0.1;        // m, dynamics y
  double sigma_dtheta = 0.01;   // rad, dynamics heading
  double sigma_range = 10.0;    // m
  double sigma_bearing = 0.05;  // rad
  double sigma_cpx = 1.0;       // robot-robot avoidance
  double sigma_cpy = 0.1;
  double sigma_opx = 1.0;       // robot-obstacle avoidance
  double sigma_opy = 0.1;

  bool all_positive() const {
    for (double s : {sigma_dx, sigma_dy, sigma_dtheta, sigma_range, sigma_bearing,
                     sigma_cpx, sigma_cpy, sigma_opx, sigma_opy})
      if (!(s > 0.0)) return false;
    return true;
  }
};

enum class FactorKind : int {
  PriorPose = 0,
  DynamicsEvader,
  DynamicsPursuer,
  MeasurePursuerEvader,
  MeasurePursuerObstacle,
  Planning,
  CollisionAvoid,
  ObstacleAvoid,
};

inline const char* kind_name(FactorKind k) {
  switch (k) {
    case FactorKind::PriorPose: return "prior";
    case FactorKind::DynamicsEvader: return "dyn_evader";
    case FactorKind::DynamicsPursuer: return "dyn_pursuer";
    case FactorKind::MeasurePursuerEvader: return "meas_evader";
    case FactorKind::MeasurePursuerObstacle: return "meas_obstacle";
    case FactorKind::Planning: return "plan";
    case FactorKind::CollisionAvoid: return "avoid_robot";
    case FactorKind::ObstacleAvoid: return "avoid_obstacle";
  }
  return "?";
}

/// One residual term. Payload fields are read according to kind:
///   PriorPose            keys {x}        pose_payload = prior mean
///   DynamicsEvader       keys {a, b}     pose_payload = predicted motion a->b
///   DynamicsPursuer      keys {a, b}     pose_payload = odometry delta a->b
///   MeasurePursuerEvader keys {p, q}     rb_payload = measured range/bearing
///   MeasurePursuerObstacle keys {p}      point_payload = obstacle, rb_payload = measured
///   Planning             keys {q, p}     pulls p's (x, y) toward q's
///   CollisionAvoid       keys {a, b}     hinge on |a - b| with (d_safe, scale)
///   ObstacleAvoid        keys {a}        hinge on surface distance to point_payload
struct Factor {
  FactorKind kind = FactorKind::PriorPose;
  std::array<VariableKey, 2> keys{};
  int num_keys = 1;

  Pose2 pose_payload{};
  RangeBearing rb_payload{};
  Point2 point_payload{};
  double obstacle_radius = 0.0;
  double d_safe = 0.0;  // hinge activation distance d_s
  double scale = 1.0;   // hinge denominator (c1 or c2)

  std::array<double, 3> sigmas{1.0, 1.0, 1.0};
  int added_at_step = 0;

  // A spent factor stays in the graph for bookkeeping (per-step counts key on
  // added_at_step) but no longer shapes the objective: planning pulls and
  // repulsion hinges steer only the pose currently being planned and are
  // spent once that pose's odometry arrives.
  bool spent = false;

  int residual_dim() const {
    switch (kind) {
      case FactorKind::PriorPose:
      case FactorKind::DynamicsEvader:
      case FactorKind::DynamicsPursuer: return 3;
      case FactorKind::MeasurePursuerEvader:
      case FactorKind::MeasurePursuerObstacle:
      case FactorKind::Planning: return 2;
      case FactorKind::CollisionAvoid:
      case FactorKind::ObstacleAvoid: return 1;
    }
    return 0;
  }
};

inline Factor make_prior(const VariableKey& key, const Pose2& mean,
                         const std::array<double, 3>& sigmas, int step = 0) {
  Factor f;
  f.kind = FactorKind::PriorPose;
  f.keys[0] = key;
  f.num_keys = 1;
  f.pose_payload = mean;
  f.sigmas = sigmas;
  f.added_at_step = step;
  return f;
}

inline Factor make_dynamics(FactorKind kind, const VariableKey& from, const VariableKey& to,
                            const Pose2& motion, const InformationWeights& w, int step) {
  Factor f;
  f.kind = kind;
  f.keys = {from, to};
  f.num_keys = 2;
  f.pose_payload = motion;
  f.sigmas = {w.sigma_dx, w.sigma_dy, w.sigma_dtheta};
  f.added_at_step = step;
  return f;
}

inline Factor make_measure_evader(const VariableKey& pursuer, const VariableKey& evader,
                                  const RangeBearing& measured, const InformationWeights& w,
                                  int step) {
  Factor f;
  f.kind = FactorKind::MeasurePursuerEvader;
  f.keys = {pursuer, evader};
  f.num_keys = 2;
  f.rb_payload = measured;
  f.sigmas = {w.sigma_range, w.sigma_bearing, 1.0};
  f.added_at_step = step;
  return f;
}

inline Factor make_measure_obstacle(const VariableKey& pursuer, const Point2& obstacle,
                                    const RangeBearing& measured, const InformationWeights& w,
                                    int step) {
  Factor f;
  f.kind = FactorKind::MeasurePursuerObstacle;
  f.keys[0] = pursuer;
  f.num_keys = 1;
  f.point_payload = obstacle;
  f.rb_payload = measured;
  f.sigmas = {w.sigma_range, w.sigma_bearing, 1.0};
  f.added_at_step = step;
  return f;
}

inline Factor make_planning(const VariableKey& evader, const VariableKey& pursuer_next,
                            double sigma, int step) {
  Factor f;
  f.kind = FactorKind::Planning;
  f.keys = {evader, pursuer_next};
  f.num_keys = 2;
  f.sigmas = {sigma, sigma, 1.0};
  f.added_at_step = step;
  return f;
}

inline Factor make_collision_avoid(const VariableKey& a, const VariableKey& b, double d_safe,
                                   double c1, double sigma, int step) {
  Factor f;
  f.kind = FactorKind::CollisionAvoid;
  f.keys = {a, b};
  f.num_keys = 2;
  f.d_safe = d_safe;
  f.scale = c1;
  f.sigmas = {sigma, 1.0, 1.0};
  f.added_at_step = step;
  return f;
}

inline Factor make_obstacle_avoid(const VariableKey& a, const Point2& obstacle,
                                  double obstacle_radius, double d_safe, double c2,
                                  double sigma, int step) {
  Factor f;
  f.kind = FactorKind::ObstacleAvoid;
  f.keys[0] = a;
  f.num_keys = 1;
  f.point_payload = obstacle;
  f.obstacle_radius = obstacle_radius;
  f.d_safe = d_safe;
  f.scale = c2;
  f.sigmas = {sigma, 1.0, 1.0};
  f.added_at_step = step;
  return f;
}

using Values = std::map<VariableKey, Pose2>;

inline const Pose2& lookup(const Values& values, const VariableKey& key) {
  auto it = values.find(key);
  if (it == values.end()) throw UnknownVariable("no value for " + to_string(key));
  return it->second;
}

namespace detail {

// d(R(theta)^T)/dtheta
inline Eigen::Matrix2d rotation_transpose_derivative(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d m;
  m << -s, c, -c, -s;
  return m;
}

}  // namespace detail

/// Weighted residual r of one factor plus (optionally) its Jacobian blocks,
/// one 3-column block per key, all scaled by the per-axis 1/sigma.
/// The factor's cost contribution is r^T r.
inline Eigen::VectorXd evaluate_factor(const Factor& f, const Values& values,
                                       std::array<Eigen::Matrix<double, 3, 3>, 2>* jacobians =
                                           nullptr) {
  Eigen::VectorXd r(f.residual_dim());
  auto jac = [&](int slot) -> Eigen::Matrix<double, 3, 3>& { return (*jacobians)[slot]; };
  if (jacobians)
    for (auto& j : *jacobians) j.setZero();

  switch (f.kind) {
    case FactorKind::PriorPose: {
      const Pose2& x = lookup(values, f.keys[0]);
      const Pose2 e = between(f.pose_payload, x);
      r << e.x / f.sigmas[0], e.y / f.sigmas[1], e.theta / f.sigmas[2];
      if (jacobians) {
        const Eigen::Matrix2d rt = f.pose_payload.rotation().transpose();
        jac(0).topLeftCorner<2, 2>() = rt;
        jac(0)(2, 2) = 1.0;
        for (int i = 0; i < 3; ++i) jac(0).row(i) /= f.sigmas[i];
      }
      break;
    }
    case FactorKind::DynamicsEvader:
    case FactorKind::DynamicsPursuer: {
      const Pose2& a = lookup(values, f.keys[0]);
      const Pose2& b = lookup(values, f.keys[1]);
      const Pose2 d = between(a, b);
      const Pose2 e = between(f.pose_payload, d);
      r << e.x / f.sigmas[0], e.y / f.sigmas[1], e.theta / f.sigmas[2];
      if (jacobians) {
        const Eigen::Matrix2d rm_t = f.pose_payload.rotation().transpose();
        const Eigen::Matrix2d ra_t = a.rotation().transpose();
        const Eigen::Vector2d dt(b.x - a.x, b.y - a.y);
        jac(0).topLeftCorner<2, 2>() = -rm_t * ra_t;
        jac(0).block<2, 1>(0, 2) =
            rm_t * (detail::rotation_transpose_derivative(a.theta) * dt);
        jac(0)(2, 2) = -1.0;
        jac(1).topLeftCorner<2, 2>() = rm_t * ra_t;
        jac(1)(2, 2) = 1.0;
        for (int i = 0; i < 3; ++i) {
          jac(0).row(i) /= f.sigmas[i];
          jac(1).row(i) /= f.sigmas[i];
        }
      }
      break;
    }
    case FactorKind::MeasurePursuerEvader:
    case FactorKind::MeasurePursuerObstacle: {
      const Pose2& p = lookup(values, f.keys[0]);
      Point2 target;
      if (f.kind == FactorKind::MeasurePursuerEvader) {
        const Pose2& q = lookup(values, f.keys[1]);
        target = q.position();
      } else {
        target = f.point_payload;
      }
      const double dx = target.x - p.x, dy = target.y - p.y;
      const double range = std::hypot(dx, dy);
      // When the current estimate puts observer and target on top of each
      // other the bearing carries no information; score only the range
      // surprise rather than aborting the solve on an undefined atan2.
      const double bearing = range <= kDegenerateRange
                                 ? f.rb_payload.bearing
                                 : wrap_angle(std::atan2(dy, dx) - p.theta);
      r << (f.rb_payload.range - range) / f.sigmas[0],
          wrap_angle(f.rb_payload.bearing - bearing) / f.sigmas[1];
      Eigen::Matrix<double, 2, 3> j_obs;
      Eigen::Matrix<double, 2, 2> j_tgt;
      if (jacobians)
        range_bearing_jacobians(p, target, j_obs, j_tgt, kMinLinearizationRange);
      if (jacobians) {
        jac(0).topRows<2>() = -j_obs;
        if (f.kind == FactorKind::MeasurePursuerEvader)
          jac(1).block<2, 2>(0, 0) = -j_tgt;
        for (int i = 0; i < 2; ++i) {
          jac(0).row(i) /= f.sigmas[i];
          if (f.num_keys == 2) jac(1).row(i) /= f.sigmas[i];
        }
      }
      break;
    }
    case FactorKind::Planning: {
      const Pose2& q = lookup(values, f.keys[0]);
      const Pose2& p = lookup(values, f.keys[1]);
      r << (q.x - p.x) / f.sigmas[0], (q.y - p.y) / f.sigmas[1];
      if (jacobians) {
        jac(0)(0, 0) = 1.0 / f.sigmas[0];
        jac(0)(1, 1) = 1.0 / f.sigmas[1];
        jac(1)(0, 0) = -1.0 / f.sigmas[0];
        jac(1)(1, 1) = -1.0 / f.sigmas[1];
      }
      break;
    }
    case FactorKind::CollisionAvoid: {
      const Pose2& a = lookup(values, f.keys[0]);
      const Pose2& b = lookup(values, f.keys[1]);
      const double dx = a.x - b.x, dy = a.y - b.y;
      const double d = std::hypot(dx, dy);
      if (d >= f.d_safe) {
        r.setZero();  // inactive side, Jacobian stays zero
      } else {
        r << (1.0 - d / f.scale) / f.sigmas[0];
        if (jacobians && d > 1e-12) {
          const double g = -1.0 / (f.scale * f.sigmas[0] * d);
          jac(0)(0, 0) = g * dx;
          jac(0)(0, 1) = g * dy;
          jac(1)(0, 0) = -g * dx;
          jac(1)(0, 1) = -g * dy;
        }
      }
      break;
    }
    case FactorKind::ObstacleAvoid: {
      const Pose2& a = lookup(values, f.keys[0]);
      const double dx = a.x - f.point_payload.x, dy = a.y - f.point_payload.y;
      const double center = std::hypot(dx, dy);
      const double d = center - f.obstacle_radius;
      if (d >= f.d_safe) {
        r.setZero();
      } else {
        r << (1.0 - d / f.scale) / f.sigmas[0];
        if (jacobians && center > 1e-12) {
          const double g = -1.0 / (f.scale * f.sigmas[0] * center);
          jac(0)(0, 0) = g * dx;
          jac(0)(0, 1) = g * dy;
        }
      }
      break;
    }
  }
  return r;
}

inline Eigen::VectorXd residual(const Factor& f, const Values& values) {
  return evaluate_factor(f, values);
}

/// Variables plus an append-only list of factors; the nonlinear least-squares
/// problem the solver works on.
class FactorGraph {
 public:
  Values& values() { return values_; }
  const Values& values() const { return values_; }
  const std::vector<Factor>& factors() const { return factors_; }

  bool has_variable(const VariableKey& key) const { return values_.count(key) != 0; }

  void add_variable(const VariableKey& key, const Pose2& initial) {
    values_[key] = initial.normalized();
  }

  void add_factor(const Factor& f) {
    for (int i = 0; i < f.num_keys; ++i)
      if (!has_variable(f.keys[i]))
        throw UnknownVariable("factor " + std::string(kind_name(f.kind)) +
                              " references missing " + to_string(f.keys[i]));
    factors_.push_back(f);
  }

  /// Mutable access for payload updates (e.g. replacing a motion prior with
  /// the measured odometry once it arrives). The list itself never shrinks.
  Factor& factor_at(std::size_t i) { return factors_.at(i); }
  std::size_t factor_count() const { return factors_.size(); }

  double total_cost(const Values& values) const {
    double c = 0.0;
    for (const auto& f : factors_)
      if (!f.spent) c += evaluate_factor(f, values).squaredNorm();
    return c;
  }
  double total_cost() const { return total_cost(values_); }

 private:
  Values values_;
  std::vector<Factor> factors_;
};

/// Factor counts for one timestep, by kind.
struct KindCounts {
  int prior = 0;
  int dyn_evader = 0;
  int dyn_pursuer = 0;
  int meas_evader = 0;
  int meas_obstacle = 0;
  int plan = 0;
  int collision_avoid = 0;
  int obstacle_avoid = 0;

  friend bool operator==(const KindCounts&, const KindCounts&) = default;
};

/// Exact per-timestep counts of factors, keyed by the step they were added.
inline std::map<int, KindCounts> factor_census(const FactorGraph& g) {
  std::map<int, KindCounts> census;
  for (const auto& f : g.factors()) {
    KindCounts& c = census[f.added_at_step];
    switch (f.kind) {
      case FactorKind::PriorPose: ++c.prior; break;
      case FactorKind::DynamicsEvader: ++c.dyn_evader; break;
      case FactorKind::DynamicsPursuer: ++c.dyn_pursuer; break;
      case FactorKind::MeasurePursuerEvader: ++c.meas_evader; break;
      case FactorKind::MeasurePursuerObstacle: ++c.meas_obstacle; break;
      case FactorKind::Planning: ++c.plan; break;
      case FactorKind::CollisionAvoid: ++c.collision_avoid; break;
      case FactorKind::ObstacleAvoid: ++c.obstacle_avoid; break;
    }
  }
  return census;
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Line-oriented dump used by golden tests. One record per variable:
///   VAR kind id t x y theta
/// and per factor:
///   FACTOR kind keys... payload... sigmas...
inline void dump_graph(const FactorGraph& g, std::ostream& os) {
  using detail::fmt_g17;
  for (const auto& [key, pose] : g.values()) {
    os << "VAR " << (key.agent_kind == AgentKind::Evader ? "evader" : "pursuer") << ' '
       << key.agent_id << ' ' << key.timestep << ' ' << fmt_g17(pose.x) << ' '
       << fmt_g17(pose.y) << ' ' << fmt_g17(pose.theta) << '\n';
  }
  auto key_token = [](const VariableKey& k) {
    return std::string(k.agent_kind == AgentKind::Evader ? "evader" : "pursuer") + ":" +
           std::to_string(k.agent_id) + ":" + std::to_string(k.timestep);
  };
  for (const auto& f : g.factors()) {
    if (f.spent) continue;  // dump only what still shapes the objective
    os << "FACTOR " << kind_name(f.kind);
    for (int i = 0; i < f.num_keys; ++i) os << ' ' << key_token(f.keys[i]);
    switch (f.kind) {
      case FactorKind::PriorPose:
      case FactorKind::DynamicsEvader:
      case FactorKind::DynamicsPursuer:
        os << ' ' << fmt_g17(f.pose_payload.x) << ' ' << fmt_g17(f.pose_payload.y) << ' '
           << fmt_g17(f.pose_payload.theta);
        break;
      case FactorKind::MeasurePursuerEvader:
        os << ' ' << fmt_g17(f.rb_payload.range) << ' ' << fmt_g17(f.rb_payload.bearing);
        break;
      case FactorKind::MeasurePursuerObstacle:
        os << ' ' << fmt_g17(f.point_payload.x) << ' ' << fmt_g17(f.point_payload.y) << ' '
           << fmt_g17(f.rb_payload.range) << ' ' << fmt_g17(f.rb_payload.bearing);
        break;
      case FactorKind::Planning:
        break;
      case FactorKind::CollisionAvoid:
        os << ' ' << fmt_g17(f.d_safe) << ' ' << fmt_g17(f.scale);
        break;
      case FactorKind::ObstacleAvoid:
        os << ' ' << fmt_g17(f.point_payload.x) << ' ' << fmt_g17(f.point_payload.y) << ' '
           << fmt_g17(f.obstacle_radius) << ' ' << fmt_g17(f.d_safe) << ' '
           << fmt_g17(f.scale);
        break;
    }
    const int ns = f.residual_dim();
    for (int i = 0; i < ns; ++i) os << ' ' << fmt_g17(f.sigmas[i]);
    os << '\n';
  }
}

}  // namespace fgpe
