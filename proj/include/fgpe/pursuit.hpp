#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/factor_graph.hpp"
#include "fgpe/geometry.hpp"
#include "fgpe/solver.hpp"

namespace fgpe {

enum class StrategyKind : int { FactorGraph = 0, PurePursuit, ConstantBearing };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::FactorGraph: return "factor_graph";
    case StrategyKind::PurePursuit: return "pure_pursuit";
    case StrategyKind::ConstantBearing: return "constant_bearing";
  }
  return "?";
}

struct FgpeConfig {
  InformationWeights weights{};
  // Deviations of the goal pull on the planned pose (sigma_plan) and of the
  // one-step motion-intent prior holding it near the current pose
  // (sigma_intent). Until odometry lands, the planned pose has no
  // measurement; these two springs place it on the segment toward the evader
  // estimate at fraction w_plan / (w_plan + w_intent) of the distance --
  // ~96% here, so the steering direction is the direction to the estimate.
  // Their series combination w_plan*w_intent/(w_plan+w_intent) (~0.04) is the
  // information with which the pull drags the *evader estimate* toward the
  // pursuers, i.e. the estimation bias; keep it small next to measurements.
  double sigma_plan = 1.0;
  double sigma_intent = 5.0;
  // The evader prior only gauge-fixes the first solve: the guess may be
  // metres off, so it must stay much weaker than a few bearing fixes.
  // Pursuers know their own starts, hence the tight prior.
  std::array<double, 3> evader_prior_sigmas{5.0, 5.0, kPi};
  std::array<double, 3> pursuer_prior_sigmas{0.01, 0.01, 0.005};
  double d_safe = 0.6;  // hinge activation distance between planned poses
  double c1 = 0.61;     // robot-robot hinge scale
  double c2 = 0.3;      // robot-obstacle hinge scale
  double steer_gain = 2.0;
  double v_max = 1.05;
  double omega_max = 2.5;
  // <0 solves the full history every step; otherwise only the last
  // window_steps timesteps stay free and older poses become constants.
  int window_steps = -1;
  LmConfig lm{};
};

struct FgpeStepResult {
  std::vector<Point2> targets;          // optimized next positions, one per pursuer
  std::vector<Command> commands;        // steering toward the targets
  std::vector<Pose2> pursuer_estimates; // current-step pose estimates
  Pose2 evader_estimate{};
  Eigen::Matrix3d evader_covariance = Eigen::Matrix3d::Zero();
  double ellipse_area = 0.0;
  SolveStats solve{};
};

/// Builds the pursuit factor graph incrementally, one call per control step,
/// and re-solves it to produce evader estimates and per-pursuer motion
/// targets. Inputs are already-noisy measurements; the tracker never sees
/// ground truth beyond the pursuers' start poses and the evader's start guess.
///
/// Per step t the graph grows: one evader pose + motion edge, the delivered
/// range-bearing factors, and a planning block for t+1 (pursuer pose, a weak
/// motion-intent edge that turns into an odometry edge once the measured
/// delta arrives, a pull toward the evader estimate, and pairwise/obstacle
/// repulsion hinges). The pull and hinges steer only the pose currently
/// being planned; both retire when that pose's odometry arrives.
class FgpeTracker {
 public:
  FgpeTracker(const FgpeConfig& cfg, const Pose2& evader_guess,
              const std::vector<Pose2>& pursuer_starts,
              const std::vector<CircleObstacle>& obstacles,
              const std::vector<double>& odometry_scales = {})
      : cfg_(cfg),
        evader_guess_(evader_guess),
        starts_(pursuer_starts),
        obstacles_(obstacles),
        odometry_scales_(odometry_scales) {
    if (starts_.empty()) throw ValidationError("factor-graph pursuit needs >= 1 pursuer");
    if (odometry_scales_.empty()) odometry_scales_.assign(starts_.size(), 1.0);
    if (odometry_scales_.size() != starts_.size())
      throw ValidationError("odometry scale count must match pursuer count");
    if (!cfg_.weights.all_positive())
      throw ValidationError("information weights must be positive");
    if (!(cfg_.sigma_plan > 0.0) || !(cfg_.sigma_intent > 0.0))
      throw ValidationError("planning sigmas must be positive");
  }

  int num_pursuers() const { return static_cast<int>(starts_.size()); }
  const FactorGraph& graph() const { return graph_; }
  FactorGraph& graph() { return graph_; }

  /// Advances the tracker by one step. `t` must be the next unprocessed step
  /// starting from 0. `odometry[i]` is pursuer i's measured body-frame motion
  /// over (t-1, t]; ignored at t == 0. Measurement slots left empty are
  /// messages that never arrived (off-tick or dropped).
  FgpeStepResult step(int t, const std::vector<Pose2>& odometry,
                      const std::vector<std::optional<RangeBearing>>& evader_meas,
                      const std::vector<std::vector<std::optional<RangeBearing>>>&
                          obstacle_meas) {
    const int n = num_pursuers();
    if (t != next_step_)
      throw ValidationError("tracker steps must be consecutive; expected " +
                            std::to_string(next_step_));
    if (evader_meas.size() != static_cast<std::size_t>(n) ||
        obstacle_meas.size() != static_cast<std::size_t>(n))
      throw ValidationError("measurement slots must match pursuer count");
    ++next_step_;

    if (t == 0) {
      graph_.add_variable(evader_key(0), evader_guess_);
      graph_.add_factor(make_prior(evader_key(0), evader_guess_,
                                   cfg_.evader_prior_sigmas, 0));
      for (int i = 0; i < n; ++i) {
        graph_.add_variable(pursuer_key(i, 0), starts_[i]);
        graph_.add_factor(
            make_prior(pursuer_key(i, 0), starts_[i], cfg_.pursuer_prior_sigmas, 0));
      }
    } else {
      if (odometry.size() != static_cast<std::size_t>(n))
        throw ValidationError("odometry slots must match pursuer count");
      // The planning edges held a weak zero-motion intent; the measured
      // deltas are in, so they become ordinary odometry edges: payload and
      // weights both switch over. The pose variable still sits at last
      // cycle's planning optimum (most of the way to the evader estimate),
      // so re-initialize it by dead reckoning before the solve.
      for (int i = 0; i < n; ++i) {
        Factor& edge = graph_.factor_at(pending_dynamics_[i]);
        const InformationWeights w = scaled_weights(i);
        edge.pose_payload = odometry[i];
        edge.sigmas = {w.sigma_dx, w.sigma_dy, w.sigma_dtheta};
        graph_.values()[pursuer_key(i, t)] =
            compose(lookup(graph_.values(), pursuer_key(i, t - 1)), odometry[i])
                .normalized();
      }
      // The pull and repulsion hinges only ever apply to the *next* pose
      // being planned. Leaving them live once that pose becomes an
      // estimation variable would keep attracting the pose chains toward
      // each other forever.
      for (std::size_t idx : pending_planning_) graph_.factor_at(idx).spent = true;
      pending_planning_.clear();
      graph_.add_variable(evader_key(t), lookup(graph_.values(), evader_key(t - 1)));
      graph_.add_factor(make_dynamics(FactorKind::DynamicsEvader, evader_key(t - 1),
                                      evader_key(t), Pose2{}, cfg_.weights, t));
    }

    for (int i = 0; i < n; ++i) {
      if (evader_meas[i])
        graph_.add_factor(make_measure_evader(pursuer_key(i, t), evader_key(t),
                                              *evader_meas[i], cfg_.weights, t));
      if (obstacle_meas[i].size() != obstacles_.size())
        throw ValidationError("obstacle measurement slots must match obstacle count");
      for (std::size_t j = 0; j < obstacles_.size(); ++j)
        if (obstacle_meas[i][j])
          graph_.add_factor(make_measure_obstacle(pursuer_key(i, t), obstacles_[j].center,
                                                  *obstacle_meas[i][j], cfg_.weights, t));
    }

    // Planning block: free poses at t+1 pulled toward the evader, repelled
    // from each other and from obstacles. Motion edges are attributed to step
    // t+1 where their odometry payload will land.
    pending_dynamics_.clear();
    InformationWeights intent = cfg_.weights;
    intent.sigma_dx = intent.sigma_dy = cfg_.sigma_intent;
    for (int i = 0; i < n; ++i) {
      const VariableKey next = pursuer_key(i, t + 1);
      graph_.add_variable(next, lookup(graph_.values(), pursuer_key(i, t)));
      pending_dynamics_.push_back(graph_.factor_count());
      graph_.add_factor(make_dynamics(FactorKind::DynamicsPursuer, pursuer_key(i, t), next,
                                      Pose2{}, intent, t + 1));
      pending_planning_.push_back(graph_.factor_count());
      graph_.add_factor(make_planning(evader_key(t), next, cfg_.sigma_plan, t));
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        pending_planning_.push_back(graph_.factor_count());
        graph_.add_factor(make_collision_avoid(pursuer_key(i, t + 1), pursuer_key(j, t + 1),
                                               cfg_.d_safe, cfg_.c1,
                                               cfg_.weights.sigma_cpx, t));
      }
    for (int i = 0; i < n; ++i)
      for (std::size_t j = 0; j < obstacles_.size(); ++j) {
        pending_planning_.push_back(graph_.factor_count());
        graph_.add_factor(make_obstacle_avoid(pursuer_key(i, t + 1), obstacles_[j].center,
                                              obstacles_[j].radius, cfg_.d_safe, cfg_.c2,
                                              cfg_.weights.sigma_opx, t));
      }

    LmConfig lm = cfg_.lm;
    if (cfg_.window_steps >= 0)
      lm.min_free_timestep = std::max(0, t + 1 - cfg_.window_steps);

    FgpeStepResult out;
    out.solve = optimize(graph_, lm);
    out.evader_estimate = lookup(graph_.values(), evader_key(t));
    out.evader_covariance =
        marginal_covariance(graph_, evader_key(t), lm.min_free_timestep);
    out.ellipse_area = ellipse_area(out.evader_covariance);

    out.targets.reserve(n);
    out.commands.reserve(n);
    out.pursuer_estimates.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Pose2& own = lookup(graph_.values(), pursuer_key(i, t));
      const Pose2& planned = lookup(graph_.values(), pursuer_key(i, t + 1));
      out.pursuer_estimates.push_back(own);
      out.targets.push_back(planned.position());
      out.commands.push_back(steer_toward(own, planned.position(), cfg_.steer_gain,
                                          cfg_.v_max, cfg_.omega_max));
    }
    return out;
  }

  /// Proportional steering toward a point at full speed. A target closer than
  /// the degenerate-range threshold keeps the current heading.
  static Command steer_toward(const Pose2& own, const Point2& target, double gain,
                              double v_max, double omega_max) {
    const double dx = target.x - own.x, dy = target.y - own.y;
    double bearing = 0.0;
    if (std::hypot(dx, dy) > kDegenerateRange)
      bearing = wrap_angle(std::atan2(dy, dx) - own.theta);
    return {v_max, std::clamp(gain * bearing, -omega_max, omega_max)};
  }

 private:
  InformationWeights scaled_weights(int pursuer) const {
    InformationWeights w = cfg_.weights;
    const double s = odometry_scales_[pursuer];
    w.sigma_dx *= s;
    w.sigma_dy *= s;
    w.sigma_dtheta *= s;
    return w;
  }

  FgpeConfig cfg_;
  Pose2 evader_guess_;
  std::vector<Pose2> starts_;
  std::vector<CircleObstacle> obstacles_;
  std::vector<double> odometry_scales_;
  FactorGraph graph_;
  std::vector<std::size_t> pending_dynamics_;
  std::vector<std::size_t> pending_planning_;
  int next_step_ = 0;
};

struct BaselineConfig {
  double gain = 2.0;
  double v_max = 1.05;
  double omega_max = 2.5;
};

/// Classic tail chase: turn toward the target point, drive at full speed.
inline Command pure_pursuit_step(const Pose2& own, const Point2& target,
                                 const BaselineConfig& cfg) {
  return FgpeTracker::steer_toward(own, target, cfg.gain, cfg.v_max, cfg.omega_max);
}

/// Intercept by holding the body-frame bearing to the target at its value
/// from the first observation; bearing drift is steered back to the
/// reference, which produces the classic collision-course geometry.
class ConstantBearingTracker {
 public:
  Command step(const Pose2& own, const Point2& target, const BaselineConfig& cfg) {
    const double dx = target.x - own.x, dy = target.y - own.y;
    if (std::hypot(dx, dy) <= kDegenerateRange) return {cfg.v_max, 0.0};
    const double bearing = wrap_angle(std::atan2(dy, dx) - own.theta);
    if (!reference_) reference_ = bearing;
    const double omega =
        std::clamp(cfg.gain * wrap_angle(bearing - *reference_), -cfg.omega_max,
                   cfg.omega_max);
    return {cfg.v_max, omega};
  }

  bool has_reference() const { return reference_.has_value(); }
  double reference() const { return reference_.value(); }

 private:
  std::optional<double> reference_;
};

}  // namespace fgpe
