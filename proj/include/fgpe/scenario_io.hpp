#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgpe/errors.hpp"
#include "fgpe/sim.hpp"

namespace fgpe {

namespace detail {

using json = nlohmann::json;

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Every object in the document is checked against the exact key set its
// struct offers; a stray key is a hard error so typos can't silently fall
// back to defaults.
inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key))
      throw ValidationError("unknown key '" + key + "' in " + where);
}

inline double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<double>();
}

inline int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<int>();
}

inline bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ValidationError(where + ": expected true/false");
  return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected a string");
  return j.get<std::string>();
}

inline Pose2 as_pose(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(where + ": expected [x, y, theta]");
  return Pose2{as_double(j[0], where), as_double(j[1], where), as_double(j[2], where)};
}

inline Point2 as_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(where + ": expected [x, y]");
  return Point2{as_double(j[0], where), as_double(j[1], where)};
}

inline std::array<double, 3> as_triple(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(where + ": expected three numbers");
  return {as_double(j[0], where), as_double(j[1], where), as_double(j[2], where)};
}

inline StrategyKind parse_strategy(const std::string& s) {
  if (s == "factor_graph") return StrategyKind::FactorGraph;
  if (s == "pure_pursuit") return StrategyKind::PurePursuit;
  if (s == "constant_bearing") return StrategyKind::ConstantBearing;
  throw ValidationError("strategy: unknown value '" + s + "'");
}

inline TrajectoryKind parse_trajectory(const std::string& s) {
  if (s == "straight") return TrajectoryKind::Straight;
  if (s == "sinusoid") return TrajectoryKind::Sinusoid;
  if (s == "cosine_arc") return TrajectoryKind::CosineArc;
  if (s == "orbit") return TrajectoryKind::Orbit;
  if (s == "dwa_goal") return TrajectoryKind::DwaGoal;
  throw ValidationError("evader.kind: unknown value '" + s + "'");
}

inline void read_weights(const json& j, InformationWeights& w) {
  require_keys(j, "fgpe.weights",
               {"sigma_dx", "sigma_dy", "sigma_dtheta", "sigma_range", "sigma_bearing",
                "sigma_cpx", "sigma_cpy", "sigma_opx", "sigma_opy"});
  if (j.contains("sigma_dx")) w.sigma_dx = as_double(j["sigma_dx"], "sigma_dx");
  if (j.contains("sigma_dy")) w.sigma_dy = as_double(j["sigma_dy"], "sigma_dy");
  if (j.contains("sigma_dtheta"))
    w.sigma_dtheta = as_double(j["sigma_dtheta"], "sigma_dtheta");
  if (j.contains("sigma_range")) w.sigma_range = as_double(j["sigma_range"], "sigma_range");
  if (j.contains("sigma_bearing"))
    w.sigma_bearing = as_double(j["sigma_bearing"], "sigma_bearing");
  if (j.contains("sigma_cpx")) w.sigma_cpx = as_double(j["sigma_cpx"], "sigma_cpx");
  if (j.contains("sigma_cpy")) w.sigma_cpy = as_double(j["sigma_cpy"], "sigma_cpy");
  if (j.contains("sigma_opx")) w.sigma_opx = as_double(j["sigma_opx"], "sigma_opx");
  if (j.contains("sigma_opy")) w.sigma_opy = as_double(j["sigma_opy"], "sigma_opy");
}

inline void read_lm(const json& j, LmConfig& lm) {
  require_keys(j, "fgpe.lm",
               {"max_iterations", "lambda_init", "lambda_min", "lambda_max", "tol_dx",
                "tol_cost_rel"});
  if (j.contains("max_iterations"))
    lm.max_iterations = as_int(j["max_iterations"], "lm.max_iterations");
  if (j.contains("lambda_init"))
    lm.lambda_init = as_double(j["lambda_init"], "lm.lambda_init");
  if (j.contains("lambda_min")) lm.lambda_min = as_double(j["lambda_min"], "lm.lambda_min");
  if (j.contains("lambda_max")) lm.lambda_max = as_double(j["lambda_max"], "lm.lambda_max");
  if (j.contains("tol_dx")) lm.tol_dx = as_double(j["tol_dx"], "lm.tol_dx");
  if (j.contains("tol_cost_rel"))
    lm.tol_cost_rel = as_double(j["tol_cost_rel"], "lm.tol_cost_rel");
}

inline void read_fgpe(const json& j, FgpeConfig& f) {
  require_keys(j, "fgpe",
               {"weights", "sigma_plan", "sigma_intent", "evader_prior_sigmas",
                "pursuer_prior_sigmas", "d_safe", "c1", "c2", "window_steps", "lm"});
  if (j.contains("weights")) read_weights(j["weights"], f.weights);
  if (j.contains("sigma_plan")) f.sigma_plan = as_double(j["sigma_plan"], "sigma_plan");
  if (j.contains("sigma_intent"))
    f.sigma_intent = as_double(j["sigma_intent"], "sigma_intent");
  if (j.contains("evader_prior_sigmas"))
    f.evader_prior_sigmas = as_triple(j["evader_prior_sigmas"], "evader_prior_sigmas");
  if (j.contains("pursuer_prior_sigmas"))
    f.pursuer_prior_sigmas = as_triple(j["pursuer_prior_sigmas"], "pursuer_prior_sigmas");
  if (j.contains("d_safe")) f.d_safe = as_double(j["d_safe"], "d_safe");
  if (j.contains("c1")) f.c1 = as_double(j["c1"], "c1");
  if (j.contains("c2")) f.c2 = as_double(j["c2"], "c2");
  if (j.contains("window_steps")) f.window_steps = as_int(j["window_steps"], "window_steps");
  if (j.contains("lm")) read_lm(j["lm"], f.lm);
}

inline void read_dwa(const json& j, DwaConfig& d) {
  // dt and robot_radius intentionally absent: the simulator forces them to
  // the scenario's values so there is a single source of truth.
  require_keys(j, "evader.dwa",
               {"v_max", "omega_max", "accel_v", "accel_omega", "horizon_steps",
                "samples_v", "samples_omega", "w_goal", "w_clear", "w_speed",
                "clearance_cap"});
  if (j.contains("v_max")) d.v_max = as_double(j["v_max"], "dwa.v_max");
  if (j.contains("omega_max")) d.omega_max = as_double(j["omega_max"], "dwa.omega_max");
  if (j.contains("accel_v")) d.accel_v = as_double(j["accel_v"], "dwa.accel_v");
  if (j.contains("accel_omega"))
    d.accel_omega = as_double(j["accel_omega"], "dwa.accel_omega");
  if (j.contains("horizon_steps"))
    d.horizon_steps = as_int(j["horizon_steps"], "dwa.horizon_steps");
  if (j.contains("samples_v")) d.samples_v = as_int(j["samples_v"], "dwa.samples_v");
  if (j.contains("samples_omega"))
    d.samples_omega = as_int(j["samples_omega"], "dwa.samples_omega");
  if (j.contains("w_goal")) d.w_goal = as_double(j["w_goal"], "dwa.w_goal");
  if (j.contains("w_clear")) d.w_clear = as_double(j["w_clear"], "dwa.w_clear");
  if (j.contains("w_speed")) d.w_speed = as_double(j["w_speed"], "dwa.w_speed");
  if (j.contains("clearance_cap"))
    d.clearance_cap = as_double(j["clearance_cap"], "dwa.clearance_cap");
}

inline void read_evader(const json& j, EvaderConfig& e) {
  require_keys(j, "evader",
               {"kind", "start", "goal", "speed", "amplitude", "wavelength", "radius",
                "dwa"});
  if (j.contains("kind")) e.kind = parse_trajectory(as_string(j["kind"], "evader.kind"));
  if (j.contains("start")) e.start = as_pose(j["start"], "evader.start");
  if (j.contains("goal")) e.goal = as_point(j["goal"], "evader.goal");
  if (j.contains("speed")) e.speed = as_double(j["speed"], "evader.speed");
  if (j.contains("amplitude")) e.amplitude = as_double(j["amplitude"], "evader.amplitude");
  if (j.contains("wavelength"))
    e.wavelength = as_double(j["wavelength"], "evader.wavelength");
  if (j.contains("radius")) e.radius = as_double(j["radius"], "evader.radius");
  if (j.contains("dwa")) read_dwa(j["dwa"], e.dwa);
}

}  // namespace detail

/// Parses a scenario document (JSON). Omitted fields keep their defaults; an
/// empty document therefore yields the default scenario. Unknown keys and
/// type mismatches are ValidationErrors naming the key; malformed text is a
/// ParseError carrying line and column. Field ranges are validated here;
/// whether the scenario is runnable (at least one pursuer) is checked when
/// an episode starts.
inline Scenario parse_scenario(const std::string& text) {
  using detail::as_bool;
  using detail::as_double;
  using detail::as_int;
  using detail::as_pose;
  using detail::as_string;
  using detail::json;

  std::string body = text;
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) body = "{}";

  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    const auto [line, column] = detail::line_column(body, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, column, e.what());
  }
  if (!j.is_object()) throw ValidationError("scenario document must be a JSON object");

  detail::require_keys(
      j, "scenario",
      {"name", "dt", "max_steps", "arena", "capture_radius", "robot_radius", "strategy",
       "pursuers_stationary", "pursuer_v_max", "pursuer_omega_max", "baseline_gain",
       "evader", "pursuers", "random_pursuers", "obstacles", "measurement_hz",
       "drop_probability", "odometry_sigma", "sensor_sigma", "fgpe", "seed"});

  Scenario sc;
  if (j.contains("name")) sc.name = as_string(j["name"], "name");
  if (j.contains("dt")) sc.dt = as_double(j["dt"], "dt");
  if (j.contains("max_steps")) sc.max_steps = as_int(j["max_steps"], "max_steps");
  if (j.contains("arena")) {
    const json& a = j["arena"];
    detail::require_keys(a, "arena", {"xmin", "ymin", "xmax", "ymax"});
    if (a.contains("xmin")) sc.arena.xmin = as_double(a["xmin"], "arena.xmin");
    if (a.contains("ymin")) sc.arena.ymin = as_double(a["ymin"], "arena.ymin");
    if (a.contains("xmax")) sc.arena.xmax = as_double(a["xmax"], "arena.xmax");
    if (a.contains("ymax")) sc.arena.ymax = as_double(a["ymax"], "arena.ymax");
  }
  if (j.contains("capture_radius"))
    sc.capture_radius = as_double(j["capture_radius"], "capture_radius");
  if (j.contains("robot_radius"))
    sc.robot_radius = as_double(j["robot_radius"], "robot_radius");
  if (j.contains("strategy"))
    sc.strategy = detail::parse_strategy(as_string(j["strategy"], "strategy"));
  if (j.contains("pursuers_stationary"))
    sc.pursuers_stationary = as_bool(j["pursuers_stationary"], "pursuers_stationary");
  if (j.contains("pursuer_v_max"))
    sc.pursuer_v_max = as_double(j["pursuer_v_max"], "pursuer_v_max");
  if (j.contains("pursuer_omega_max"))
    sc.pursuer_omega_max = as_double(j["pursuer_omega_max"], "pursuer_omega_max");
  if (j.contains("baseline_gain"))
    sc.baseline_gain = as_double(j["baseline_gain"], "baseline_gain");
  if (j.contains("evader")) detail::read_evader(j["evader"], sc.evader);
  if (j.contains("pursuers")) {
    const json& ps = j["pursuers"];
    if (!ps.is_array()) throw ValidationError("pursuers: expected an array");
    sc.pursuers.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string where = "pursuers[" + std::to_string(i) + "]";
      detail::require_keys(ps[i], where, {"start", "odometry_scale"});
      PursuerSpec p;
      if (!ps[i].contains("start")) throw ValidationError(where + ": missing start");
      p.start = as_pose(ps[i]["start"], where + ".start");
      if (ps[i].contains("odometry_scale"))
        p.odometry_scale = as_double(ps[i]["odometry_scale"], where + ".odometry_scale");
      sc.pursuers.push_back(p);
    }
  }
  if (j.contains("random_pursuers")) {
    const json& r = j["random_pursuers"];
    detail::require_keys(r, "random_pursuers",
                         {"count", "min_separation", "min_evader_distance", "margin"});
    if (r.contains("count"))
      sc.random_pursuers.count = as_int(r["count"], "random_pursuers.count");
    if (r.contains("min_separation"))
      sc.random_pursuers.min_separation =
          as_double(r["min_separation"], "random_pursuers.min_separation");
    if (r.contains("min_evader_distance"))
      sc.random_pursuers.min_evader_distance =
          as_double(r["min_evader_distance"], "random_pursuers.min_evader_distance");
    if (r.contains("margin"))
      sc.random_pursuers.margin = as_double(r["margin"], "random_pursuers.margin");
  }
  if (j.contains("obstacles")) {
    const json& obs = j["obstacles"];
    if (!obs.is_array()) throw ValidationError("obstacles: expected an array");
    sc.obstacles.clear();
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string where = "obstacles[" + std::to_string(i) + "]";
      detail::require_keys(obs[i], where, {"center", "radius"});
      CircleObstacle ob;
      if (!obs[i].contains("center")) throw ValidationError(where + ": missing center");
      ob.center = detail::as_point(obs[i]["center"], where + ".center");
      if (obs[i].contains("radius"))
        ob.radius = as_double(obs[i]["radius"], where + ".radius");
      sc.obstacles.push_back(ob);
    }
  }
  if (j.contains("measurement_hz"))
    sc.measurement_hz = as_double(j["measurement_hz"], "measurement_hz");
  if (j.contains("drop_probability"))
    sc.drop_probability = as_double(j["drop_probability"], "drop_probability");
  if (j.contains("odometry_sigma"))
    sc.odometry_sigma = detail::as_triple(j["odometry_sigma"], "odometry_sigma");
  if (j.contains("sensor_sigma")) {
    const json& s = j["sensor_sigma"];
    detail::require_keys(s, "sensor_sigma", {"range", "bearing"});
    if (s.contains("range"))
      sc.sensor_sigma.range = as_double(s["range"], "sensor_sigma.range");
    if (s.contains("bearing"))
      sc.sensor_sigma.bearing = as_double(s["bearing"], "sensor_sigma.bearing");
  }
  if (j.contains("fgpe")) detail::read_fgpe(j["fgpe"], sc.fgpe);
  if (j.contains("seed")) {
    const json& s = j["seed"];
    // get<uint64_t> would silently wrap a negative integer; check first.
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ValidationError("seed: expected a non-negative integer");
    sc.seed = s.get<std::uint64_t>();
  }

  sc.validate_fields();
  return sc;
}

/// Serializes every field, defaults included, so a round trip through
/// parse_scenario reproduces the scenario exactly. Keys are emitted in
/// sorted order; output is deterministic byte for byte.
inline std::string serialize_scenario(const Scenario& sc) {
  using detail::json;
  auto pose = [](const Pose2& p) { return json::array({p.x, p.y, p.theta}); };
  auto point = [](const Point2& p) { return json::array({p.x, p.y}); };

  json j;
  j["name"] = sc.name;
  j["dt"] = sc.dt;
  j["max_steps"] = sc.max_steps;
  j["arena"] = {{"xmin", sc.arena.xmin},
                {"ymin", sc.arena.ymin},
                {"xmax", sc.arena.xmax},
                {"ymax", sc.arena.ymax}};
  j["capture_radius"] = sc.capture_radius;
  j["robot_radius"] = sc.robot_radius;
  j["strategy"] = to_string(sc.strategy);
  j["pursuers_stationary"] = sc.pursuers_stationary;
  j["pursuer_v_max"] = sc.pursuer_v_max;
  j["pursuer_omega_max"] = sc.pursuer_omega_max;
  j["baseline_gain"] = sc.baseline_gain;

  json e;
  e["kind"] = to_string(sc.evader.kind);
  e["start"] = pose(sc.evader.start);
  e["goal"] = point(sc.evader.goal);
  e["speed"] = sc.evader.speed;
  e["amplitude"] = sc.evader.amplitude;
  e["wavelength"] = sc.evader.wavelength;
  e["radius"] = sc.evader.radius;
  e["dwa"] = {{"v_max", sc.evader.dwa.v_max},
              {"omega_max", sc.evader.dwa.omega_max},
              {"accel_v", sc.evader.dwa.accel_v},
              {"accel_omega", sc.evader.dwa.accel_omega},
              {"horizon_steps", sc.evader.dwa.horizon_steps},
              {"samples_v", sc.evader.dwa.samples_v},
              {"samples_omega", sc.evader.dwa.samples_omega},
              {"w_goal", sc.evader.dwa.w_goal},
              {"w_clear", sc.evader.dwa.w_clear},
              {"w_speed", sc.evader.dwa.w_speed},
              {"clearance_cap", sc.evader.dwa.clearance_cap}};
  j["evader"] = e;

  json ps = json::array();
  for (const auto& p : sc.pursuers)
    ps.push_back({{"start", pose(p.start)}, {"odometry_scale", p.odometry_scale}});
  j["pursuers"] = ps;
  j["random_pursuers"] = {{"count", sc.random_pursuers.count},
                          {"min_separation", sc.random_pursuers.min_separation},
                          {"min_evader_distance", sc.random_pursuers.min_evader_distance},
                          {"margin", sc.random_pursuers.margin}};
  json obs = json::array();
  for (const auto& ob : sc.obstacles)
    obs.push_back({{"center", point(ob.center)}, {"radius", ob.radius}});
  j["obstacles"] = obs;

  j["measurement_hz"] = sc.measurement_hz;
  j["drop_probability"] = sc.drop_probability;
  j["odometry_sigma"] =
      json::array({sc.odometry_sigma[0], sc.odometry_sigma[1], sc.odometry_sigma[2]});
  j["sensor_sigma"] = {{"range", sc.sensor_sigma.range},
                       {"bearing", sc.sensor_sigma.bearing}};

  const InformationWeights& w = sc.fgpe.weights;
  json f;
  f["weights"] = {{"sigma_dx", w.sigma_dx},       {"sigma_dy", w.sigma_dy},
                  {"sigma_dtheta", w.sigma_dtheta}, {"sigma_range", w.sigma_range},
                  {"sigma_bearing", w.sigma_bearing}, {"sigma_cpx", w.sigma_cpx},
                  {"sigma_cpy", w.sigma_cpy},     {"sigma_opx", w.sigma_opx},
                  {"sigma_opy", w.sigma_opy}};
  f["sigma_plan"] = sc.fgpe.sigma_plan;
  f["sigma_intent"] = sc.fgpe.sigma_intent;
  f["evader_prior_sigmas"] = json::array({sc.fgpe.evader_prior_sigmas[0],
                                          sc.fgpe.evader_prior_sigmas[1],
                                          sc.fgpe.evader_prior_sigmas[2]});
  f["pursuer_prior_sigmas"] = json::array({sc.fgpe.pursuer_prior_sigmas[0],
                                           sc.fgpe.pursuer_prior_sigmas[1],
                                           sc.fgpe.pursuer_prior_sigmas[2]});
  f["d_safe"] = sc.fgpe.d_safe;
  f["c1"] = sc.fgpe.c1;
  f["c2"] = sc.fgpe.c2;
  f["window_steps"] = sc.fgpe.window_steps;
  f["lm"] = {{"max_iterations", sc.fgpe.lm.max_iterations},
             {"lambda_init", sc.fgpe.lm.lambda_init},
             {"lambda_min", sc.fgpe.lm.lambda_min},
             {"lambda_max", sc.fgpe.lm.lambda_max},
             {"tol_dx", sc.fgpe.lm.tol_dx},
             {"tol_cost_rel", sc.fgpe.lm.tol_cost_rel}};
  j["fgpe"] = f;
  j["seed"] = sc.seed;

  return j.dump(2) + "\n";
}

/// Reads and parses a scenario file. A missing or unreadable file is a
/// ParseError at position 0 so the CLI maps it to a configuration failure.
inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, 0, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace fgpe
