#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "fgpe/evader.hpp"
#include "fgpe/geometry.hpp"

using namespace fgpe;
using Catch::Approx;

namespace {

// Independent re-scorer: re-derives the sample window, integrates every
// rollout, and applies the scoring and tie rules in straightforward code.
// Used as the oracle for dwa_plan.
struct NaiveBest {
  bool found = false;
  Command cmd{};
  double score = -std::numeric_limits<double>::infinity();
};

double naive_score(const Pose2& pose, const Command& cmd, const Point2& goal,
                   const std::vector<CircleObstacle>& obstacles, const DwaConfig& cfg,
                   const Rect* arena, bool* feasible) {
  Pose2 p = pose;
  double clearance = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.horizon_steps; ++k) {
    p = Pose2{p.x + cmd.v * std::cos(p.theta) * cfg.dt,
              p.y + cmd.v * std::sin(p.theta) * cfg.dt,
              wrap_angle(p.theta + cmd.omega * cfg.dt)};
    for (const auto& ob : obstacles) {
      const double d =
          std::hypot(p.x - ob.center.x, p.y - ob.center.y) - ob.radius - cfg.robot_radius;
      clearance = std::min(clearance, d);
    }
    if (arena) {
      clearance = std::min(clearance, p.x - arena->xmin - cfg.robot_radius);
      clearance = std::min(clearance, arena->xmax - p.x - cfg.robot_radius);
      clearance = std::min(clearance, p.y - arena->ymin - cfg.robot_radius);
      clearance = std::min(clearance, arena->ymax - p.y - cfg.robot_radius);
    }
  }
  *feasible = clearance > 0.0;
  double heading_error = 0.0;
  if (std::hypot(goal.x - p.x, goal.y - p.y) > 1e-9)
    heading_error = std::abs(wrap_angle(std::atan2(goal.y - p.y, goal.x - p.x) - p.theta));
  return cfg.w_goal * (kPi - heading_error) / kPi +
         cfg.w_clear * std::min(clearance, cfg.clearance_cap) + cfg.w_speed * cmd.v;
}

NaiveBest naive_dwa(const Pose2& pose, const Command& current, const Point2& goal,
                    const std::vector<CircleObstacle>& obstacles, const DwaConfig& cfg,
                    const Rect* arena) {
  NaiveBest best;
  const double v_lo = std::max(-cfg.v_max, current.v - cfg.accel_v * cfg.dt);
  const double v_hi = std::min(cfg.v_max, current.v + cfg.accel_v * cfg.dt);
  const double w_lo = std::max(-cfg.omega_max, current.omega - cfg.accel_omega * cfg.dt);
  const double w_hi = std::min(cfg.omega_max, current.omega + cfg.accel_omega * cfg.dt);
  for (int iv = 0; iv < cfg.samples_v; ++iv)
    for (int iw = 0; iw < cfg.samples_omega; ++iw) {
      Command cmd;
      cmd.v = cfg.samples_v > 1 ? v_lo + (v_hi - v_lo) * iv / (cfg.samples_v - 1)
                                : 0.5 * (v_lo + v_hi);
      cmd.omega = cfg.samples_omega > 1
                      ? w_lo + (w_hi - w_lo) * iw / (cfg.samples_omega - 1)
                      : 0.5 * (w_lo + w_hi);
      bool feasible = false;
      const double score = naive_score(pose, cmd, goal, obstacles, cfg, arena, &feasible);
      if (!feasible) continue;
      if (!best.found || score > best.score ||
          (score == best.score && std::abs(cmd.omega) < std::abs(best.cmd.omega))) {
        best.found = true;
        best.cmd = cmd;
        best.score = score;
      }
    }
  return best;
}

}  // namespace

TEST_CASE("rollout integrates a constant command", "[evader]") {
  const std::vector<Pose2> poses = rollout(Pose2{0, 0, 0}, Command{2.0, 0.0}, 5, 0.1);
  REQUIRE(poses.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(poses[k].x == Approx(0.2 * (k + 1)));
    CHECK(poses[k].y == Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("planner agrees with the naive re-scorer", "[evader]") {
  DwaConfig cfg;
  const Rect arena{0, 0, 20, 20};

  struct Case {
    Pose2 pose;
    Command current;
    Point2 goal;
    std::vector<CircleObstacle> obstacles;
  };
  const std::vector<Case> cases = {
      {{5, 5, 0}, {0.5, 0}, {15, 5}, {}},
      {{5, 5, 0}, {1.0, 0}, {15, 5}, {{{8, 5}, 1.0}}},
      {{5, 5, 1.2}, {0.2, -0.5}, {12, 14}, {{{8, 9}, 1.5}, {{6, 12}, 1.0}}},
      {{10, 10, -2.0}, {0.8, 0.3}, {3, 4}, {{{7, 7}, 2.0}}},
      {{2, 2, 0.5}, {0.0, 0.0}, {18, 18}, {{{4, 4}, 0.8}}},
  };

  for (std::size_t i = 0; i < cases.size(); ++i) {
    INFO("case " << i);
    const Case& c = cases[i];
    const Command cmd = dwa_plan(c.pose, c.current, c.goal, c.obstacles, cfg, &arena);
    const NaiveBest ref = naive_dwa(c.pose, c.current, c.goal, c.obstacles, cfg, &arena);
    REQUIRE(ref.found);

    bool feasible = false;
    const double got =
        naive_score(c.pose, cmd, c.goal, c.obstacles, cfg, &arena, &feasible);
    REQUIRE(feasible);
    CHECK(got >= ref.score - 1e-12);
    // Same tie rules: identical command, not merely an equal score.
    CHECK(cmd.v == ref.cmd.v);
    CHECK(cmd.omega == ref.cmd.omega);

    const Command again = dwa_plan(c.pose, c.current, c.goal, c.obstacles, cfg, &arena);
    CHECK(cmd.v == again.v);
    CHECK(cmd.omega == again.omega);
  }
}

TEST_CASE("planner respects the acceleration window", "[evader]") {
  DwaConfig cfg;
  cfg.accel_v = 2.0;
  cfg.accel_omega = 5.0;
  cfg.dt = 0.05;
  const Command current{0.0, 0.0};
  const Command cmd = dwa_plan(Pose2{5, 5, 0}, current, Point2{15, 5}, {}, cfg);
  CHECK(std::abs(cmd.v - current.v) <= cfg.accel_v * cfg.dt + 1e-12);
  CHECK(std::abs(cmd.omega - current.omega) <= cfg.accel_omega * cfg.dt + 1e-12);
}

TEST_CASE("planner turns away from a blocking obstacle", "[evader]") {
  DwaConfig cfg;
  cfg.samples_omega = 21;
  cfg.accel_omega = 50.0;  // a hard swerve is reachable within one step
  // Wall of one obstacle dead ahead; goal behind it. At full speed the only
  // collision-free rollouts are the ones that turn.
  const std::vector<CircleObstacle> obstacles = {{{7.0, 5.0}, 1.2}};
  const Command cmd =
      dwa_plan(Pose2{5, 5, 0}, Command{1.0, 0.0}, Point2{12, 5}, obstacles, cfg);
  CHECK(cmd.omega != 0.0);  // straight ahead would clip the obstacle
}

TEST_CASE("fully blocked planner reports no feasible command", "[evader]") {
  DwaConfig cfg;
  std::vector<CircleObstacle> ring;
  for (int i = 0; i < 12; ++i) {
    const double a = 2.0 * kPi * i / 12.0;
    ring.push_back({{5.0 + 0.45 * std::cos(a), 5.0 + 0.45 * std::sin(a)}, 0.3});
  }
  CHECK_THROWS_AS(dwa_plan(Pose2{5, 5, 0}, Command{1.0, 0.0}, Point2{15, 5}, ring, cfg),
                  NoFeasibleCommand);
}

TEST_CASE("straight path runs along the start heading", "[evader]") {
  EvaderConfig cfg;
  cfg.kind = TrajectoryKind::Straight;
  cfg.start = Pose2{1.0, 2.0, kPi / 4.0};
  ScriptedPath path(cfg);
  const Pose2 p = path.pose_at(std::sqrt(2.0));
  CHECK(p.x == Approx(2.0));
  CHECK(p.y == Approx(3.0));
  CHECK(p.theta == Approx(kPi / 4.0));
}

TEST_CASE("orbit path stays on the circle and closes", "[evader]") {
  EvaderConfig cfg;
  cfg.kind = TrajectoryKind::Orbit;
  cfg.start = Pose2{5.0, 3.0, 0.0};
  cfg.radius = 2.0;
  ScriptedPath path(cfg);

  const double cx = 5.0, cy = 5.0;  // left of the start heading
  for (double s : {0.3, 1.0, 2.5, 4.0, 7.0}) {
    const Pose2 p = path.pose_at(s);
    CHECK(std::hypot(p.x - cx, p.y - cy) == Approx(2.0));
    CHECK(p.theta == Approx(wrap_angle(0.0 + s / 2.0)));
  }
  const Pose2 loop = path.pose_at(2.0 * kPi * 2.0);
  CHECK(loop.x == Approx(5.0).margin(1e-9));
  CHECK(loop.y == Approx(3.0).margin(1e-9));
}

TEST_CASE("wave paths advance at unit arc speed", "[evader]") {
  for (TrajectoryKind kind : {TrajectoryKind::Sinusoid, TrajectoryKind::CosineArc}) {
    EvaderConfig cfg;
    cfg.kind = kind;
    cfg.start = Pose2{0.0, 0.0, 0.0};
    cfg.amplitude = 2.0;
    cfg.wavelength = 8.0;
    ScriptedPath path(cfg);

    Pose2 prev = path.pose_at(0.0);
    double max_speed_err = 0.0, max_y = -1e9, min_y = 1e9;
    const double ds = 0.05;
    for (double s = ds; s <= 30.0; s += ds) {
      const Pose2 p = path.pose_at(s);
      const double step = std::hypot(p.x - prev.x, p.y - prev.y);
      max_speed_err = std::max(max_speed_err, std::abs(step - ds));
      // Heading follows the local tangent.
      const double tangent = std::atan2(p.y - prev.y, p.x - prev.x);
      CHECK(std::abs(wrap_angle(tangent - p.theta)) < 0.05);
      max_y = std::max(max_y, p.y);
      min_y = std::min(min_y, p.y);
      prev = p;
    }
    INFO(to_string(kind));
    CHECK(max_speed_err < 0.01 * ds);  // constant-speed parametrization
    if (kind == TrajectoryKind::Sinusoid) {
      CHECK(max_y == Approx(2.0).margin(0.01));
      CHECK(min_y == Approx(-2.0).margin(0.01));
    } else {
      CHECK(max_y == Approx(2.0).margin(0.01));
      CHECK(min_y == Approx(0.0).margin(0.01));
    }
  }
}

TEST_CASE("scripted path rejects rewinding and unscripted kinds", "[evader]") {
  EvaderConfig cfg;
  cfg.kind = TrajectoryKind::Sinusoid;
  ScriptedPath path(cfg);
  path.pose_at(2.0);
  CHECK_THROWS_AS(path.pose_at(1.0), ValidationError);

  EvaderConfig dwa_cfg;
  dwa_cfg.kind = TrajectoryKind::DwaGoal;
  ScriptedPath dwa_path(dwa_cfg);
  CHECK_THROWS_AS(dwa_path.pose_at(1.0), ValidationError);
}
