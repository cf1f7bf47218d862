#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/evader.hpp"
#include "fgpe/geometry.hpp"
#include "fgpe/pursuit.hpp"
#include "fgpe/rng.hpp"

namespace fgpe {

struct PursuerSpec {
  Pose2 start{};
  double odometry_scale = 1.0;  // multiplies the true odometry noise sigmas
};

/// Seeded random placement of pursuer start poses (used instead of an
/// explicit pursuer list).
struct RandomPursuers {
  int count = 0;  // 0 disables random placement
  double min_separation = 1.0;
  double min_evader_distance = 5.0;
  double margin = 2.0;  // keep-out border inside the arena
};

struct SensorSigma {
  double range = 10.0;
  double bearing = 0.05;
};

/// Full description of one episode; everything the simulator needs except
/// the seed. Values are in meters, seconds, radians.
struct Scenario {
  std::string name = "scenario";
  double dt = 0.05;
  int max_steps = 1200;
  Rect arena{0.0, 0.0, 35.0, 35.0};
  double capture_radius = 0.6;
  double robot_radius = 0.3;

  StrategyKind strategy = StrategyKind::FactorGraph;
  bool pursuers_stationary = false;
  double pursuer_v_max = 1.05;
  double pursuer_omega_max = 2.5;
  double baseline_gain = 2.0;

  EvaderConfig evader{};
  std::vector<PursuerSpec> pursuers;
  RandomPursuers random_pursuers{};
  std::vector<CircleObstacle> obstacles;

  double measurement_hz = 20.0;    // evader range-bearing broadcast rate
  double drop_probability = 0.0;  // per message, per tick
  std::array<double, 3> odometry_sigma{0.01, 0.01, 0.002};  // true noise per step
  SensorSigma sensor_sigma{};

  FgpeConfig fgpe{};
  std::uint64_t seed = 0;

  int num_pursuers() const {
    return random_pursuers.count > 0 ? random_pursuers.count
                                     : static_cast<int>(pursuers.size());
  }

  /// Steps between evader measurement broadcasts; the first tick is step 0.
  int measurement_period_steps() const {
    if (measurement_hz <= 0.0) return std::numeric_limits<int>::max();
    const double period = 1.0 / (measurement_hz * dt);
    return std::max(1, static_cast<int>(std::lround(period)));
  }

  /// Field-level checks only; a scenario document can be valid without yet
  /// being runnable (e.g. no pursuers placed).
  void validate_fields() const {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (max_steps < 0) throw ValidationError("max_steps must be >= 0");
    if (arena.width() <= 0.0 || arena.height() <= 0.0)
      throw ValidationError("arena must have positive extent");
    if (capture_radius < 0.0) throw ValidationError("capture_radius must be >= 0");
    if (robot_radius < 0.0) throw ValidationError("robot_radius must be >= 0");
    if (drop_probability < 0.0 || drop_probability > 1.0)
      throw ValidationError("drop_probability must lie in [0, 1]");
    if (!(pursuer_v_max > 0.0)) throw ValidationError("pursuer_v_max must be positive");
    for (const auto& s : odometry_sigma)
      if (s < 0.0) throw ValidationError("odometry_sigma must be >= 0");
    if (sensor_sigma.range < 0.0 || sensor_sigma.bearing < 0.0)
      throw ValidationError("sensor sigmas must be >= 0");
    for (const auto& ob : obstacles)
      if (ob.radius < 0.0) throw ValidationError("obstacle radius must be >= 0");
    if (!fgpe.weights.all_positive())
      throw ValidationError("information weights must be positive");
    if (!(fgpe.sigma_plan > 0.0)) throw ValidationError("sigma_plan must be positive");
    if (!(fgpe.sigma_intent > 0.0)) throw ValidationError("sigma_intent must be positive");
  }

  void validate() const {
    validate_fields();
    if (num_pursuers() < 1) throw ValidationError("scenario needs at least one pursuer");
  }
};

struct TraceRow {
  int step = 0;
  AgentKind kind = AgentKind::Evader;
  int id = 0;
  Pose2 pose{};
  Command cmd{};
};

/// Rolled-up solver effort for one episode. Deliberately excludes wall-clock
/// time so results are byte-stable across machines and reruns.
struct SolveAggregate {
  long total_iterations = 0;
  long total_accepted = 0;
  int max_iterations_step = 0;
  double final_cost = 0.0;
  std::size_t final_variables = 0;
  std::size_t final_factors = 0;
};

struct EpisodeResult {
  std::string scenario_name;
  StrategyKind strategy = StrategyKind::FactorGraph;
  std::uint64_t seed = 0;
  int num_pursuers = 0;
  bool captured = false;
  int capture_step = -1;   // -1 when the episode ran out of steps
  double capture_time = 0.0;  // censored at max_steps * dt
  int steps_run = 0;

  // Safety audit over true poses, sampled every step.
  double min_pursuer_separation = std::numeric_limits<double>::infinity();
  double min_obstacle_clearance = std::numeric_limits<double>::infinity();
  int robot_collision_steps = 0;     // steps with any pursuer pair in contact
  int obstacle_collision_steps = 0;  // steps with any pursuer inside an obstacle

  // Factor-graph strategy only; empty for the baselines.
  std::vector<double> ellipse_areas;     // one per step
  std::vector<double> estimate_errors;   // |estimated - true| evader position
  std::vector<Pose2> estimate_path;      // evader estimate, one per step
  std::vector<std::array<double, 3>> estimate_cov;  // xy marginal: xx, xy, yy
  SolveAggregate solve{};

  std::vector<TraceRow> trace;  // pose at each step plus the command applied
};

namespace detail {

// Entity ids for noise streams: pursuer sensing streams are offset by which
// target they measure so message drops never shift another stream's draws.
inline std::uint64_t sense_entity(int pursuer, int target_slot) {
  // target_slot: 0 = evader, 1 + j = obstacle j
  return static_cast<std::uint64_t>(pursuer) * 4096ull +
         static_cast<std::uint64_t>(target_slot);
}

inline RangeBearing perturb(const RangeBearing& z, double sigma_range, double sigma_bearing,
                            NoiseStream& range_stream, NoiseStream& bearing_stream) {
  RangeBearing out;
  out.range = std::max(0.0, z.range + range_stream.gaussian(sigma_range));
  out.bearing = wrap_angle(z.bearing + bearing_stream.gaussian(sigma_bearing));
  return out;
}

}  // namespace detail

/// Seeded random pursuer placement with rejection for minimum separations.
inline std::vector<PursuerSpec> place_random_pursuers(const Scenario& sc,
                                                      std::uint64_t seed) {
  std::vector<PursuerSpec> out;
  const RandomPursuers& rp = sc.random_pursuers;
  for (int i = 0; i < rp.count; ++i) {
    NoiseStream stream(seed, 0, static_cast<std::uint64_t>(i), NoisePurpose::InitPlacement);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Pose2 candidate{stream.uniform(sc.arena.xmin + rp.margin, sc.arena.xmax - rp.margin),
                      stream.uniform(sc.arena.ymin + rp.margin, sc.arena.ymax - rp.margin),
                      stream.uniform(-kPi, kPi)};
      bool ok = distance(candidate.position(), sc.evader.start.position()) >=
                rp.min_evader_distance;
      for (const auto& prev : out)
        ok = ok && distance(candidate.position(), prev.start.position()) >=
                       rp.min_separation;
      for (const auto& ob : sc.obstacles)
        ok = ok && distance(candidate.position(), ob.center) >=
                       ob.radius + sc.robot_radius + rp.min_separation;
      if (ok) {
        out.push_back({candidate, 1.0});
        placed = true;
      }
    }
    if (!placed)
      throw DegenerateSample("could not place pursuer " + std::to_string(i) +
                             " after 1000 attempts");
  }
  return out;
}

/// Runs one seeded episode to capture or the step limit. Component failures
/// (solver breakdowns, degenerate geometry) surface as EpisodeAborted tagged
/// with the step that failed.
inline EpisodeResult run_episode(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();

  EpisodeResult result;
  result.scenario_name = scenario.name;
  result.strategy = scenario.strategy;
  result.seed = seed;

  std::vector<PursuerSpec> pursuers = scenario.random_pursuers.count > 0
                                          ? place_random_pursuers(scenario, seed)
                                          : scenario.pursuers;
  const int n = static_cast<int>(pursuers.size());
  result.num_pursuers = n;
  if (n < 1) throw ValidationError("scenario needs at least one pursuer");

  // True world state.
  Pose2 evader_true = scenario.evader.start.normalized();
  std::vector<Pose2> pursuer_true;
  std::vector<double> odometry_scales;
  for (const auto& p : pursuers) {
    pursuer_true.push_back(p.start.normalized());
    odometry_scales.push_back(p.odometry_scale);
  }

  // Strategy state.
  FgpeConfig fg_cfg = scenario.fgpe;
  fg_cfg.v_max = scenario.pursuer_v_max;
  fg_cfg.omega_max = scenario.pursuer_omega_max;
  fg_cfg.steer_gain = scenario.baseline_gain;
  std::optional<FgpeTracker> tracker;
  if (scenario.strategy == StrategyKind::FactorGraph)
    tracker.emplace(fg_cfg, scenario.evader.start, pursuer_true, scenario.obstacles,
                    odometry_scales);
  const BaselineConfig baseline{scenario.baseline_gain, scenario.pursuer_v_max,
                                scenario.pursuer_omega_max};
  std::vector<ConstantBearingTracker> cb_trackers(n);
  std::vector<std::optional<Point2>> last_seen(n);  // baselines chase stale fixes

  // Evader state.
  EvaderConfig ev_cfg = scenario.evader;
  ev_cfg.dwa.dt = scenario.dt;
  ev_cfg.dwa.robot_radius = scenario.robot_radius;
  const bool scripted = ev_cfg.kind != TrajectoryKind::DwaGoal;
  ScriptedPath path(ev_cfg);
  double arc_length = 0.0;
  Command evader_cmd = scripted ? Command{ev_cfg.speed, 0.0} : Command{};
  double prev_evader_theta = evader_true.theta;

  const int tick_period = scenario.measurement_period_steps();
  const int n_obstacles = static_cast<int>(scenario.obstacles.size());
  std::vector<Pose2> pursuer_odometry(n);  // measured deltas from the last step

  int step = 0;
  try {
    for (step = 0; step < scenario.max_steps; ++step) {
      // 1. Capture check on true poses, before anyone moves this step.
      for (const auto& p : pursuer_true) {
        if (distance(p.position(), evader_true.position()) <= scenario.capture_radius) {
          result.captured = true;
          break;
        }
      }
      if (result.captured) break;

      // 2. Sense. Evader fixes go out on measurement ticks and may drop;
      // obstacle fixes are local to each pursuer, every step, never dropped.
      const bool tick = scenario.measurement_hz > 0.0 && (step % tick_period) == 0;
      std::vector<std::optional<RangeBearing>> evader_meas(n);
      std::vector<std::vector<std::optional<RangeBearing>>> obstacle_meas(
          n, std::vector<std::optional<RangeBearing>>(n_obstacles));
      for (int i = 0; i < n; ++i) {
        if (tick) {
          NoiseStream drop(seed, step, static_cast<std::uint64_t>(i),
                           NoisePurpose::MessageDrop);
          const bool dropped = drop.uniform() < scenario.drop_probability;
          if (!dropped) {
            NoiseStream rs(seed, step, detail::sense_entity(i, 0),
                           NoisePurpose::MeasureRange);
            NoiseStream bs(seed, step, detail::sense_entity(i, 0),
                           NoisePurpose::MeasureBearing);
            evader_meas[i] = detail::perturb(
                range_bearing(pursuer_true[i], evader_true.position()),
                scenario.sensor_sigma.range, scenario.sensor_sigma.bearing, rs, bs);
          }
        }
        for (int j = 0; j < n_obstacles; ++j) {
          NoiseStream rs(seed, step, detail::sense_entity(i, 1 + j),
                         NoisePurpose::MeasureRange);
          NoiseStream bs(seed, step, detail::sense_entity(i, 1 + j),
                         NoisePurpose::MeasureBearing);
          obstacle_meas[i][j] = detail::perturb(
              range_bearing(pursuer_true[i], scenario.obstacles[j].center),
              scenario.sensor_sigma.range, scenario.sensor_sigma.bearing, rs, bs);
        }
      }

      // 3. Pursuer strategy -> commands.
      std::vector<Command> pursuer_cmds(n);
      if (scenario.strategy == StrategyKind::FactorGraph) {
        FgpeStepResult fg = tracker->step(step, pursuer_odometry, evader_meas,
                                          obstacle_meas);
        pursuer_cmds = fg.commands;
        result.ellipse_areas.push_back(fg.ellipse_area);
        result.estimate_errors.push_back(
            distance(fg.evader_estimate.position(), evader_true.position()));
        result.estimate_path.push_back(fg.evader_estimate);
        result.estimate_cov.push_back({fg.evader_covariance(0, 0),
                                       fg.evader_covariance(0, 1),
                                       fg.evader_covariance(1, 1)});
        result.solve.total_iterations += fg.solve.iterations;
        result.solve.total_accepted += fg.solve.accepted_steps;
        result.solve.max_iterations_step =
            std::max(result.solve.max_iterations_step, fg.solve.iterations);
        result.solve.final_cost = fg.solve.final_cost;
        result.solve.final_variables = tracker->graph().values().size();
        result.solve.final_factors = tracker->graph().factor_count();
      } else {
        for (int i = 0; i < n; ++i) {
          if (evader_meas[i]) {
            // The observed point sits on the measured ray from the true pose.
            const Pose2& own = pursuer_true[i];
            const double a = own.theta + evader_meas[i]->bearing;
            last_seen[i] = Point2{own.x + evader_meas[i]->range * std::cos(a),
                                  own.y + evader_meas[i]->range * std::sin(a)};
          }
          if (!last_seen[i]) continue;  // nothing seen yet: hold still
          pursuer_cmds[i] =
              scenario.strategy == StrategyKind::PurePursuit
                  ? pure_pursuit_step(pursuer_true[i], *last_seen[i], baseline)
                  : cb_trackers[i].step(pursuer_true[i], *last_seen[i], baseline);
        }
      }
      if (scenario.pursuers_stationary)
        for (auto& c : pursuer_cmds) c = Command{};

      // 4. Evader plan.
      if (!scripted) {
        std::vector<CircleObstacle> threats = scenario.obstacles;
        for (const auto& p : pursuer_true)
          threats.push_back({p.position(), scenario.robot_radius});
        try {
          evader_cmd = dwa_plan(evader_true, evader_cmd, ev_cfg.goal, threats, ev_cfg.dwa,
                                &scenario.arena);
        } catch (const NoFeasibleCommand&) {
          evader_cmd = Command{};  // boxed in: stop
        }
      }

      // 5. Trace current poses with the commands about to be applied.
      result.trace.push_back({step, AgentKind::Evader, 0, evader_true, evader_cmd});
      for (int i = 0; i < n; ++i)
        result.trace.push_back(
            {step, AgentKind::Pursuer, i, pursuer_true[i], pursuer_cmds[i]});

      // 6. Advance true state. Pursuer odometry is the true motion corrupted
      // per-axis in the body frame; the true motion itself is exact.
      pursuer_odometry.assign(n, Pose2{});
      for (int i = 0; i < n; ++i) {
        Command c = pursuer_cmds[i];
        c.v = std::clamp(c.v, -scenario.pursuer_v_max, scenario.pursuer_v_max);
        c.omega = std::clamp(c.omega, -scenario.pursuer_omega_max,
                             scenario.pursuer_omega_max);
        const Pose2 before = pursuer_true[i];
        Pose2 after = advance_unicycle(before, c, scenario.dt);
        const Point2 clamped = scenario.arena.clamp(after.position());
        after.x = clamped.x;
        after.y = clamped.y;
        pursuer_true[i] = after;

        const Pose2 true_delta = between(before, after);
        NoiseStream ox(seed, step + 1, static_cast<std::uint64_t>(i),
                       NoisePurpose::OdometryX);
        NoiseStream oy(seed, step + 1, static_cast<std::uint64_t>(i),
                       NoisePurpose::OdometryY);
        NoiseStream ot(seed, step + 1, static_cast<std::uint64_t>(i),
                       NoisePurpose::OdometryTheta);
        const double s = odometry_scales[i];
        pursuer_odometry[i] =
            Pose2{true_delta.x + ox.gaussian(s * scenario.odometry_sigma[0]),
                  true_delta.y + oy.gaussian(s * scenario.odometry_sigma[1]),
                  wrap_angle(true_delta.theta +
                             ot.gaussian(s * scenario.odometry_sigma[2]))};
      }
      if (scripted) {
        arc_length += ev_cfg.speed * scenario.dt;
        const Pose2 next = path.pose_at(arc_length);
        evader_cmd = {ev_cfg.speed,
                      wrap_angle(next.theta - prev_evader_theta) / scenario.dt};
        prev_evader_theta = next.theta;
        evader_true = next;
      } else {
        evader_true = advance_unicycle(evader_true, evader_cmd, scenario.dt);
        const Point2 clamped = scenario.arena.clamp(evader_true.position());
        evader_true.x = clamped.x;
        evader_true.y = clamped.y;
      }

      // 7. Safety audit on the new true poses.
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          result.min_pursuer_separation =
              std::min(result.min_pursuer_separation,
                       distance(pursuer_true[i].position(), pursuer_true[j].position()));
      for (int i = 0; i < n; ++i)
        for (const auto& ob : scenario.obstacles)
          result.min_obstacle_clearance =
              std::min(result.min_obstacle_clearance,
                       distance(pursuer_true[i].position(), ob.center) - ob.radius -
                           scenario.robot_radius);
      bool robot_contact = false;
      for (int i = 0; i < n && !robot_contact; ++i)
        for (int j = i + 1; j < n && !robot_contact; ++j)
          robot_contact = distance(pursuer_true[i].position(),
                                   pursuer_true[j].position()) < 2.0 * scenario.robot_radius;
      if (robot_contact) ++result.robot_collision_steps;
      bool obstacle_contact = false;
      for (int i = 0; i < n && !obstacle_contact; ++i)
        for (const auto& ob : scenario.obstacles)
          if (distance(pursuer_true[i].position(), ob.center) <
              ob.radius + scenario.robot_radius) {
            obstacle_contact = true;
            break;
          }
      if (obstacle_contact) ++result.obstacle_collision_steps;
    }
  } catch (const EpisodeAborted&) {
    throw;
  } catch (const std::exception& e) {
    throw EpisodeAborted(step, e.what());
  }

  result.steps_run = step;
  if (result.captured) {
    result.capture_step = step;
    result.capture_time = step * scenario.dt;
  } else {
    result.capture_step = -1;
    result.capture_time = scenario.max_steps * scenario.dt;
  }
  return result;
}

/// Line dump of an episode trace: `step kind id x y theta v omega`.
inline void dump_trace(const EpisodeResult& result, std::ostream& os) {
  using detail::fmt_g17;
  for (const auto& row : result.trace)
    os << row.step << ' ' << (row.kind == AgentKind::Evader ? "evader" : "pursuer") << ' '
       << row.id << ' ' << fmt_g17(row.pose.x) << ' ' << fmt_g17(row.pose.y) << ' '
       << fmt_g17(row.pose.theta) << ' ' << fmt_g17(row.cmd.v) << ' '
       << fmt_g17(row.cmd.omega) << '\n';
}

}  // namespace fgpe
