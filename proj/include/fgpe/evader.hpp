#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/geometry.hpp"

namespace fgpe {

struct DwaConfig {
  double v_max = 1.0;        // m/s
  double omega_max = 2.5;    // rad/s
  double accel_v = 2.0;      // m/s^2, reachable-window half-width per second
  double accel_omega = 5.0;  // rad/s^2
  double dt = 0.05;          // control period; rollouts integrate at this step
  int horizon_steps = 20;
  int samples_v = 7;
  int samples_omega = 15;
  double w_goal = 1.0;
  double w_clear = 0.3;
  double w_speed = 0.2;
  double clearance_cap = 1.0;  // clearance beyond this earns no extra score
  double robot_radius = 0.3;
};

/// Constant-command forward simulation; poses after 1..steps periods.
inline std::vector<Pose2> rollout(const Pose2& start, const Command& cmd, int steps,
                                  double dt) {
  std::vector<Pose2> out;
  out.reserve(steps);
  Pose2 p = start;
  for (int i = 0; i < steps; ++i) {
    p = advance_unicycle(p, cmd, dt);
    out.push_back(p);
  }
  return out;
}

namespace detail {

// Worst-case margin of a rollout: smallest surface distance to any obstacle
// (and to the arena walls when bounded). Negative means contact.
inline double rollout_clearance(const std::vector<Pose2>& poses,
                                const std::vector<CircleObstacle>& obstacles,
                                const Rect* arena, double robot_radius) {
  double clearance = std::numeric_limits<double>::infinity();
  for (const Pose2& p : poses) {
    for (const CircleObstacle& ob : obstacles) {
      const double d =
          std::hypot(p.x - ob.center.x, p.y - ob.center.y) - ob.radius - robot_radius;
      clearance = std::min(clearance, d);
    }
    if (arena) {
      const double wall = std::min(std::min(p.x - arena->xmin, arena->xmax - p.x),
                                   std::min(p.y - arena->ymin, arena->ymax - p.y)) -
                          robot_radius;
      clearance = std::min(clearance, wall);
    }
  }
  return clearance;
}

}  // namespace detail

/// Dynamic-window planner: samples commands inside the acceleration-reachable
/// window, scores constant-command rollouts on goal heading, clearance, and
/// speed, and returns the best. Colliding rollouts are infeasible; ties break
/// toward smaller |omega|, then earlier sample order. Throws NoFeasibleCommand
/// when every sample collides.
inline Command dwa_plan(const Pose2& pose, const Command& current, const Point2& goal,
                        const std::vector<CircleObstacle>& obstacles, const DwaConfig& cfg,
                        const Rect* arena = nullptr) {
  const double v_lo = std::max(-cfg.v_max, current.v - cfg.accel_v * cfg.dt);
  const double v_hi = std::min(cfg.v_max, current.v + cfg.accel_v * cfg.dt);
  const double w_lo = std::max(-cfg.omega_max, current.omega - cfg.accel_omega * cfg.dt);
  const double w_hi = std::min(cfg.omega_max, current.omega + cfg.accel_omega * cfg.dt);

  auto sample = [](double lo, double hi, int n, int i) {
    return n > 1 ? lo + (hi - lo) * i / (n - 1) : 0.5 * (lo + hi);
  };

  bool found = false;
  Command best{};
  double best_score = -std::numeric_limits<double>::infinity();

  for (int iv = 0; iv < cfg.samples_v; ++iv) {
    for (int iw = 0; iw < cfg.samples_omega; ++iw) {
      const Command cmd{sample(v_lo, v_hi, cfg.samples_v, iv),
                        sample(w_lo, w_hi, cfg.samples_omega, iw)};
      const std::vector<Pose2> poses = rollout(pose, cmd, cfg.horizon_steps, cfg.dt);
      const double clearance =
          detail::rollout_clearance(poses, obstacles, arena, cfg.robot_radius);
      if (clearance <= 0.0) continue;  // infeasible: contact somewhere on the rollout

      const Pose2& end = poses.back();
      const double gx = goal.x - end.x, gy = goal.y - end.y;
      double heading_error = 0.0;  // on top of the goal, any heading is fine
      if (std::hypot(gx, gy) > kDegenerateRange)
        heading_error = std::abs(wrap_angle(std::atan2(gy, gx) - end.theta));
      const double score = cfg.w_goal * (kPi - heading_error) / kPi +
                           cfg.w_clear * std::min(clearance, cfg.clearance_cap) +
                           cfg.w_speed * cmd.v;

      if (!found || score > best_score ||
          (score == best_score && std::abs(cmd.omega) < std::abs(best.omega))) {
        found = true;
        best = cmd;
        best_score = score;
      }
    }
  }
  if (!found) throw NoFeasibleCommand("every sampled command collides within the horizon");
  return best;
}

enum class TrajectoryKind : int { Straight = 0, Sinusoid, CosineArc, Orbit, DwaGoal };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Straight: return "straight";
    case TrajectoryKind::Sinusoid: return "sinusoid";
    case TrajectoryKind::CosineArc: return "cosine_arc";
    case TrajectoryKind::Orbit: return "orbit";
    case TrajectoryKind::DwaGoal: return "dwa_goal";
  }
  return "?";
}

struct EvaderConfig {
  TrajectoryKind kind = TrajectoryKind::DwaGoal;
  Pose2 start{};
  Point2 goal{};         // DwaGoal steering target
  double speed = 1.0;    // m/s along a scripted path
  double amplitude = 2.0;
  double wavelength = 8.0;
  double radius = 5.0;   // orbit radius (counter-clockwise)
  DwaConfig dwa{};
};

/// Pose along a scripted path as a function of arc length. Wave profiles are
/// integrated numerically, so queries must come in non-decreasing arc-length
/// order; straight lines and orbits are closed-form.
class ScriptedPath {
 public:
  explicit ScriptedPath(const EvaderConfig& cfg) : cfg_(cfg) {
    if (cfg_.kind == TrajectoryKind::Sinusoid || cfg_.kind == TrajectoryKind::CosineArc)
      step_dx_ = cfg_.wavelength / 2000.0;
  }

  Pose2 pose_at(double s) {
    switch (cfg_.kind) {
      case TrajectoryKind::Straight: {
        const double c = std::cos(cfg_.start.theta), sn = std::sin(cfg_.start.theta);
        return {cfg_.start.x + s * c, cfg_.start.y + s * sn, cfg_.start.theta};
      }
      case TrajectoryKind::Orbit: {
        const double r = cfg_.radius;
        const double cx = cfg_.start.x - r * std::sin(cfg_.start.theta);
        const double cy = cfg_.start.y + r * std::cos(cfg_.start.theta);
        const double phi = cfg_.start.theta - kPi / 2.0 + s / r;
        return {cx + r * std::cos(phi), cy + r * std::sin(phi),
                wrap_angle(cfg_.start.theta + s / r)};
      }
      case TrajectoryKind::Sinusoid:
      case TrajectoryKind::CosineArc:
        return profile_pose_at(s);
      case TrajectoryKind::DwaGoal:
        throw ValidationError("dwa_goal evader has no scripted path");
    }
    throw ValidationError("unknown trajectory kind");
  }

 private:
  double profile(double x) const {
    const double phase = 2.0 * kPi * x / cfg_.wavelength;
    if (cfg_.kind == TrajectoryKind::Sinusoid) return cfg_.amplitude * std::sin(phase);
    return 0.5 * cfg_.amplitude * (1.0 - std::cos(phase));
  }
  double profile_slope(double x) const {
    const double k = 2.0 * kPi / cfg_.wavelength;
    if (cfg_.kind == TrajectoryKind::Sinusoid) return cfg_.amplitude * k * std::cos(k * x);
    return 0.5 * cfg_.amplitude * k * std::sin(k * x);
  }

  Pose2 profile_pose_at(double s) {
    if (s < s_done_ - 1e-12)
      throw ValidationError("scripted path queried with decreasing arc length");
    while (s_done_ < s) {
      const double dy = profile(x_local_ + step_dx_) - profile(x_local_);
      const double ds = std::hypot(step_dx_, dy);
      if (s_done_ + ds >= s) {
        x_local_ += step_dx_ * (s - s_done_) / ds;
        s_done_ = s;
        break;
      }
      x_local_ += step_dx_;
      s_done_ += ds;
    }
    const Pose2 local{x_local_, profile(x_local_), std::atan2(profile_slope(x_local_), 1.0)};
    return compose(cfg_.start, local);
  }

  EvaderConfig cfg_;
  double step_dx_ = 0.0;
  double s_done_ = 0.0;
  double x_local_ = 0.0;
};

}  // namespace fgpe
