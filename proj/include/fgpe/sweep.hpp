#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fgpe/errors.hpp"
#include "fgpe/scenario_io.hpp"
#include "fgpe/sim.hpp"
#include "fgpe/stats.hpp"

namespace fgpe {

/// One swept parameter: a dotted path into the scenario plus the values it
/// takes. The sweep runs the cartesian product of all axes.
struct SweepAxis {
  std::string path;
  std::vector<double> values;
};

struct SweepSpec {
  Scenario base;
  std::vector<SweepAxis> axes;
  int seeds_per_cell = 1;
  int parallelism = 1;
  std::size_t budget = 10000;  // hard cap on episodes; FGPE_BUDGET overrides
};

/// Sets one scalar scenario parameter by dotted path. Integer-valued fields
/// round to the nearest integer. Unknown paths are ValidationErrors so a
/// typo fails the sweep up front instead of silently sweeping nothing.
inline void set_parameter(Scenario& sc, const std::string& path, double value) {
  using Setter = std::function<void(Scenario&, double)>;
  auto d = [](double Scenario::*field) {
    return [field](Scenario& s, double v) { s.*field = v; };
  };
  static const std::map<std::string, Setter> registry = {
      {"dt", d(&Scenario::dt)},
      {"max_steps", [](Scenario& s, double v) { s.max_steps = static_cast<int>(std::llround(v)); }},
      {"arena.xmin", [](Scenario& s, double v) { s.arena.xmin = v; }},
      {"arena.ymin", [](Scenario& s, double v) { s.arena.ymin = v; }},
      {"arena.xmax", [](Scenario& s, double v) { s.arena.xmax = v; }},
      {"arena.ymax", [](Scenario& s, double v) { s.arena.ymax = v; }},
      {"capture_radius", d(&Scenario::capture_radius)},
      {"robot_radius", d(&Scenario::robot_radius)},
      {"pursuer_v_max", d(&Scenario::pursuer_v_max)},
      {"pursuer_omega_max", d(&Scenario::pursuer_omega_max)},
      {"baseline_gain", d(&Scenario::baseline_gain)},
      {"measurement_hz", d(&Scenario::measurement_hz)},
      {"drop_probability", d(&Scenario::drop_probability)},
      {"evader.speed", [](Scenario& s, double v) { s.evader.speed = v; }},
      {"evader.amplitude", [](Scenario& s, double v) { s.evader.amplitude = v; }},
      {"evader.wavelength", [](Scenario& s, double v) { s.evader.wavelength = v; }},
      {"evader.radius", [](Scenario& s, double v) { s.evader.radius = v; }},
      {"evader.goal.x", [](Scenario& s, double v) { s.evader.goal.x = v; }},
      {"evader.goal.y", [](Scenario& s, double v) { s.evader.goal.y = v; }},
      {"evader.dwa.v_max", [](Scenario& s, double v) { s.evader.dwa.v_max = v; }},
      {"evader.dwa.omega_max", [](Scenario& s, double v) { s.evader.dwa.omega_max = v; }},
      {"evader.dwa.accel_v", [](Scenario& s, double v) { s.evader.dwa.accel_v = v; }},
      {"evader.dwa.accel_omega",
       [](Scenario& s, double v) { s.evader.dwa.accel_omega = v; }},
      {"evader.dwa.horizon_steps",
       [](Scenario& s, double v) { s.evader.dwa.horizon_steps = static_cast<int>(std::llround(v)); }},
      {"evader.dwa.samples_v",
       [](Scenario& s, double v) { s.evader.dwa.samples_v = static_cast<int>(std::llround(v)); }},
      {"evader.dwa.samples_omega",
       [](Scenario& s, double v) { s.evader.dwa.samples_omega = static_cast<int>(std::llround(v)); }},
      {"evader.dwa.w_goal", [](Scenario& s, double v) { s.evader.dwa.w_goal = v; }},
      {"evader.dwa.w_clear", [](Scenario& s, double v) { s.evader.dwa.w_clear = v; }},
      {"evader.dwa.w_speed", [](Scenario& s, double v) { s.evader.dwa.w_speed = v; }},
      {"evader.dwa.clearance_cap",
       [](Scenario& s, double v) { s.evader.dwa.clearance_cap = v; }},
      {"random_pursuers.count",
       [](Scenario& s, double v) { s.random_pursuers.count = static_cast<int>(std::llround(v)); }},
      {"random_pursuers.min_separation",
       [](Scenario& s, double v) { s.random_pursuers.min_separation = v; }},
      {"random_pursuers.min_evader_distance",
       [](Scenario& s, double v) { s.random_pursuers.min_evader_distance = v; }},
      {"random_pursuers.margin",
       [](Scenario& s, double v) { s.random_pursuers.margin = v; }},
      {"odometry_sigma.x", [](Scenario& s, double v) { s.odometry_sigma[0] = v; }},
      {"odometry_sigma.y", [](Scenario& s, double v) { s.odometry_sigma[1] = v; }},
      {"odometry_sigma.theta", [](Scenario& s, double v) { s.odometry_sigma[2] = v; }},
      {"sensor_sigma.range", [](Scenario& s, double v) { s.sensor_sigma.range = v; }},
      {"sensor_sigma.bearing", [](Scenario& s, double v) { s.sensor_sigma.bearing = v; }},
      {"fgpe.weights.sigma_dx",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_dx = v; }},
      {"fgpe.weights.sigma_dy",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_dy = v; }},
      {"fgpe.weights.sigma_dtheta",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_dtheta = v; }},
      {"fgpe.weights.sigma_range",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_range = v; }},
      {"fgpe.weights.sigma_bearing",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_bearing = v; }},
      {"fgpe.weights.sigma_cpx",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_cpx = v; }},
      {"fgpe.weights.sigma_cpy",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_cpy = v; }},
      {"fgpe.weights.sigma_opx",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_opx = v; }},
      {"fgpe.weights.sigma_opy",
       [](Scenario& s, double v) { s.fgpe.weights.sigma_opy = v; }},
      {"fgpe.sigma_plan", [](Scenario& s, double v) { s.fgpe.sigma_plan = v; }},
      {"fgpe.sigma_intent", [](Scenario& s, double v) { s.fgpe.sigma_intent = v; }},
      {"fgpe.d_safe", [](Scenario& s, double v) { s.fgpe.d_safe = v; }},
      {"fgpe.c1", [](Scenario& s, double v) { s.fgpe.c1 = v; }},
      {"fgpe.c2", [](Scenario& s, double v) { s.fgpe.c2 = v; }},
      {"fgpe.window_steps",
       [](Scenario& s, double v) { s.fgpe.window_steps = static_cast<int>(std::llround(v)); }},
      {"fgpe.lm.max_iterations",
       [](Scenario& s, double v) { s.fgpe.lm.max_iterations = static_cast<int>(std::llround(v)); }},
      {"fgpe.lm.lambda_init", [](Scenario& s, double v) { s.fgpe.lm.lambda_init = v; }},
  };
  const auto it = registry.find(path);
  if (it == registry.end())
    throw ValidationError("unknown sweep parameter '" + path + "'");
  it->second(sc, value);
}

/// One finished (or failed) episode inside a sweep.
struct RunRecord {
  int cell = 0;
  std::uint64_t seed = 0;  // the seed run_episode actually received
  std::vector<std::pair<std::string, double>> params;  // axis path -> value

  std::string scenario_name;
  std::string strategy;
  int num_pursuers = 0;
  bool captured = false;
  int capture_step = -1;
  double capture_time = 0.0;
  int steps_run = 0;
  double min_pursuer_separation = 0.0;
  double min_obstacle_clearance = 0.0;
  int robot_collision_steps = 0;
  int obstacle_collision_steps = 0;
  double mean_ellipse_area = 0.0;
  double final_ellipse_area = 0.0;
  double mean_estimate_error = 0.0;
  double final_estimate_error = 0.0;
  long total_iterations = 0;
  long total_accepted = 0;
  int max_iterations_step = 0;
  double final_cost = 0.0;

  bool failed = false;
  std::string error;
};

namespace detail {

inline RunRecord summarize(const EpisodeResult& r) {
  RunRecord rec;
  rec.scenario_name = r.scenario_name;
  rec.strategy = to_string(r.strategy);
  rec.num_pursuers = r.num_pursuers;
  rec.captured = r.captured;
  rec.capture_step = r.capture_step;
  rec.capture_time = r.capture_time;
  rec.steps_run = r.steps_run;
  rec.min_pursuer_separation = r.min_pursuer_separation;
  rec.min_obstacle_clearance = r.min_obstacle_clearance;
  rec.robot_collision_steps = r.robot_collision_steps;
  rec.obstacle_collision_steps = r.obstacle_collision_steps;
  if (!r.ellipse_areas.empty()) {
    rec.mean_ellipse_area = mean(r.ellipse_areas);
    rec.final_ellipse_area = r.ellipse_areas.back();
  }
  if (!r.estimate_errors.empty()) {
    rec.mean_estimate_error = mean(r.estimate_errors);
    rec.final_estimate_error = r.estimate_errors.back();
  }
  rec.total_iterations = r.solve.total_iterations;
  rec.total_accepted = r.solve.total_accepted;
  rec.max_iterations_step = r.solve.max_iterations_step;
  rec.final_cost = r.solve.final_cost;
  return rec;
}

// JSON has no literal for non-finite numbers (nlohmann would emit null), but
// fields like min_pursuer_separation are legitimately infinite when a
// scenario has a single pursuer; encode those as tagged strings.
inline nlohmann::json encode_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0.0 ? "inf" : "-inf";
}

inline double decode_double(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = encode_double(v);
  return nlohmann::json{{"cell", r.cell},
                        {"seed", r.seed},
                        {"params", params},
                        {"scenario", r.scenario_name},
                        {"strategy", r.strategy},
                        {"num_pursuers", r.num_pursuers},
                        {"captured", r.captured},
                        {"capture_step", r.capture_step},
                        {"capture_time", encode_double(r.capture_time)},
                        {"steps_run", r.steps_run},
                        {"min_pursuer_separation", encode_double(r.min_pursuer_separation)},
                        {"min_obstacle_clearance", encode_double(r.min_obstacle_clearance)},
                        {"robot_collision_steps", r.robot_collision_steps},
                        {"obstacle_collision_steps", r.obstacle_collision_steps},
                        {"mean_ellipse_area", encode_double(r.mean_ellipse_area)},
                        {"final_ellipse_area", encode_double(r.final_ellipse_area)},
                        {"mean_estimate_error", encode_double(r.mean_estimate_error)},
                        {"final_estimate_error", encode_double(r.final_estimate_error)},
                        {"total_iterations", r.total_iterations},
                        {"total_accepted", r.total_accepted},
                        {"max_iterations_step", r.max_iterations_step},
                        {"final_cost", encode_double(r.final_cost)},
                        {"failed", r.failed},
                        {"error", r.error}};
}

inline RunRecord record_from_json(const nlohmann::json& j,
                                  const std::vector<std::string>& axis_paths) {
  RunRecord r;
  r.cell = j.at("cell").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  // Parameters are stored as an object; rebuild the pairs in axis order so
  // resumed and fresh records serialize identically.
  for (const auto& path : axis_paths)
    if (j.at("params").contains(path))
      r.params.emplace_back(path, decode_double(j.at("params").at(path)));
  r.scenario_name = j.at("scenario").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.num_pursuers = j.at("num_pursuers").get<int>();
  r.captured = j.at("captured").get<bool>();
  r.capture_step = j.at("capture_step").get<int>();
  r.capture_time = decode_double(j.at("capture_time"));
  r.steps_run = j.at("steps_run").get<int>();
  r.min_pursuer_separation = decode_double(j.at("min_pursuer_separation"));
  r.min_obstacle_clearance = decode_double(j.at("min_obstacle_clearance"));
  r.robot_collision_steps = j.at("robot_collision_steps").get<int>();
  r.obstacle_collision_steps = j.at("obstacle_collision_steps").get<int>();
  r.mean_ellipse_area = decode_double(j.at("mean_ellipse_area"));
  r.final_ellipse_area = decode_double(j.at("final_ellipse_area"));
  r.mean_estimate_error = decode_double(j.at("mean_estimate_error"));
  r.final_estimate_error = decode_double(j.at("final_estimate_error"));
  r.total_iterations = j.at("total_iterations").get<long>();
  r.total_accepted = j.at("total_accepted").get<long>();
  r.max_iterations_step = j.at("max_iterations_step").get<int>();
  r.final_cost = decode_double(j.at("final_cost"));
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

/// Episode budget, honoring the FGPE_BUDGET environment override.
inline std::size_t effective_budget(std::size_t configured) {
  if (const char* env = std::getenv("FGPE_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw ValidationError("FGPE_BUDGET must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return configured;
}

/// Fixed CSV column order: identity, axis parameters (in axis order), then
/// the metrics. Identical records serialize to identical bytes.
inline void emit_csv(const std::vector<RunRecord>& records,
                     const std::vector<std::string>& axis_paths, std::ostream& os) {
  using fgpe::detail::fmt_g17;
  os << "cell,seed";
  for (const auto& p : axis_paths) os << ',' << detail::csv_escape(p);
  os << ",scenario,strategy,num_pursuers,captured,capture_step,capture_time,steps_run,"
        "min_pursuer_separation,min_obstacle_clearance,robot_collision_steps,"
        "obstacle_collision_steps,mean_ellipse_area,final_ellipse_area,"
        "mean_estimate_error,final_estimate_error,total_iterations,total_accepted,"
        "max_iterations_step,final_cost,failed,error\n";
  for (const auto& r : records) {
    os << r.cell << ',' << r.seed;
    for (std::size_t i = 0; i < axis_paths.size(); ++i) {
      os << ',';
      if (i < r.params.size()) os << fmt_g17(r.params[i].second);
    }
    os << ',' << detail::csv_escape(r.scenario_name) << ','
       << detail::csv_escape(r.strategy) << ',' << r.num_pursuers << ','
       << (r.captured ? 1 : 0) << ',' << r.capture_step << ','
       << fmt_g17(r.capture_time) << ',' << r.steps_run << ','
       << fmt_g17(r.min_pursuer_separation) << ',' << fmt_g17(r.min_obstacle_clearance)
       << ',' << r.robot_collision_steps << ',' << r.obstacle_collision_steps << ','
       << fmt_g17(r.mean_ellipse_area) << ',' << fmt_g17(r.final_ellipse_area) << ','
       << fmt_g17(r.mean_estimate_error) << ',' << fmt_g17(r.final_estimate_error)
       << ',' << r.total_iterations << ',' << r.total_accepted << ','
       << r.max_iterations_step << ',' << fmt_g17(r.final_cost) << ','
       << (r.failed ? 1 : 0) << ',' << detail::csv_escape(r.error) << '\n';
  }
}

struct SweepResult {
  std::vector<RunRecord> records;  // sorted by (cell, seed)
  std::vector<std::string> axis_paths;
  int failures = 0;
};

/// Runs the cartesian sweep. The first axis varies slowest. Episode seeds are
/// base.seed + {0 .. seeds_per_cell-1}, identical across cells so cells pair
/// seed for seed. Results land in out_dir: manifest.json (the sweep spec, to
/// refuse resuming a different one), records.jsonl (one record per finished
/// episode, appended as episodes complete), summary.csv (rewritten at the end
/// from all records, sorted). A rerun over the same out_dir skips episodes
/// already in records.jsonl. Episode failures are recorded, not fatal.
inline SweepResult run_sweep(const SweepSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using nlohmann::json;

  if (spec.seeds_per_cell < 1) throw ValidationError("seeds_per_cell must be >= 1");
  std::size_t n_cells = 1;
  std::vector<std::string> axis_paths;
  for (const auto& axis : spec.axes) {
    if (axis.values.empty())
      throw ValidationError("sweep axis '" + axis.path + "' has no values");
    n_cells *= axis.values.size();
    axis_paths.push_back(axis.path);
  }
  const std::size_t n_episodes = n_cells * static_cast<std::size_t>(spec.seeds_per_cell);
  const std::size_t budget = effective_budget(spec.budget);
  if (n_episodes > budget)
    throw ValidationError("sweep would run " + std::to_string(n_episodes) +
                          " episodes, over the budget of " + std::to_string(budget));

  // Reject bad axis paths before any episode runs.
  {
    Scenario probe = spec.base;
    for (const auto& axis : spec.axes) set_parameter(probe, axis.path, axis.values[0]);
  }

  fs::create_directories(out_dir);
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  const fs::path records_path = fs::path(out_dir) / "records.jsonl";
  const fs::path summary_path = fs::path(out_dir) / "summary.csv";

  json manifest;
  manifest["base"] = json::parse(serialize_scenario(spec.base));
  manifest["seeds_per_cell"] = spec.seeds_per_cell;
  json axes = json::array();
  for (const auto& axis : spec.axes)
    axes.push_back({{"path", axis.path}, {"values", axis.values}});
  manifest["axes"] = axes;
  const std::string manifest_text = manifest.dump(2) + "\n";

  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (buf.str() != manifest_text)
      throw ValidationError("output directory '" + out_dir +
                            "' holds a different sweep; refusing to mix results");
  } else {
    std::ofstream out(manifest_path);
    out << manifest_text;
  }

  // Load what a previous (possibly interrupted) run already finished.
  std::vector<RunRecord> done;
  std::set<std::pair<int, std::uint64_t>> done_keys;
  if (fs::exists(records_path)) {
    std::ifstream in(records_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      RunRecord r = detail::record_from_json(json::parse(line), axis_paths);
      if (done_keys.insert({r.cell, r.seed}).second) done.push_back(std::move(r));
    }
  }

  // Axis values for one cell; the first axis is the slowest-varying index.
  auto cell_params = [&](int cell) {
    std::vector<std::pair<std::string, double>> params;
    std::size_t rest = static_cast<std::size_t>(cell);
    std::size_t block = n_cells;
    for (const auto& axis : spec.axes) {
      block /= axis.values.size();
      params.emplace_back(axis.path, axis.values[rest / block]);
      rest %= block;
    }
    return params;
  };

  struct Task {
    int cell;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < n_cells; ++c)
    for (int s = 0; s < spec.seeds_per_cell; ++s) {
      const std::uint64_t seed = spec.base.seed + static_cast<std::uint64_t>(s);
      if (!done_keys.count({static_cast<int>(c), seed}))
        tasks.push_back({static_cast<int>(c), seed});
    }

  std::vector<RunRecord> fresh(tasks.size());
  std::ofstream records_out(records_path, std::ios::app);
  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      RunRecord rec;
      rec.cell = task.cell;
      rec.seed = task.seed;
      rec.params = cell_params(task.cell);
      try {
        Scenario sc = spec.base;
        for (const auto& [path, value] : rec.params) set_parameter(sc, path, value);
        const EpisodeResult result = run_episode(sc, task.seed);
        RunRecord summary = detail::summarize(result);
        summary.cell = rec.cell;
        summary.seed = rec.seed;
        summary.params = rec.params;
        rec = std::move(summary);
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.scenario_name = spec.base.name;
        rec.strategy = to_string(spec.base.strategy);
      }
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        records_out << detail::record_to_json(rec).dump() << '\n';
        records_out.flush();
      }
      fresh[t] = std::move(rec);
    }
  };

  const int n_workers = std::max(1, std::min<int>(spec.parallelism,
                                                  static_cast<int>(tasks.size())));
  if (!tasks.empty()) {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult out;
  out.axis_paths = axis_paths;
  out.records = std::move(done);
  for (auto& r : fresh) out.records.push_back(std::move(r));
  std::sort(out.records.begin(), out.records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::tie(a.cell, a.seed) < std::tie(b.cell, b.seed);
            });
  for (const auto& r : out.records)
    if (r.failed) ++out.failures;

  std::ofstream csv(summary_path);
  emit_csv(out.records, axis_paths, csv);
  return out;
}

// ---------------------------------------------------------------------------
// CSV reading and correlation, for the correlate stage.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = detail::split_csv_line(line);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    table.rows.push_back(detail::split_csv_line(line));
  }
  return table;
}

/// Pearson correlation of each listed parameter column against the metric
/// column, over rows that did not fail. A parameter that is constant in the
/// data (or has fewer than two usable rows) reports NaN rather than aborting
/// the rest of the report.
inline CorrelationReport correlate_table(const CsvTable& table,
                                         const std::vector<std::string>& parameters,
                                         const std::string& metric) {
  const int metric_col = table.column(metric);
  if (metric_col < 0) throw ValidationError("metric column '" + metric + "' not found");
  const int failed_col = table.column("failed");

  CorrelationReport report;
  report.metric = metric;
  for (const auto& param : parameters) {
    const int col = table.column(param);
    if (col < 0) throw ValidationError("parameter column '" + param + "' not found");
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
      if (failed_col >= 0 && row[failed_col] == "1") continue;
      xs.push_back(std::stod(row[col]));
      ys.push_back(std::stod(row[metric_col]));
    }
    ParameterCorrelation pc;
    pc.parameter = param;
    pc.samples = xs.size();
    try {
      pc.r = pearson(xs, ys);
      pc.ci_half_width = xs.size() >= 4 ? fisher_ci_half_width(pc.r, xs.size())
                                        : std::numeric_limits<double>::quiet_NaN();
    } catch (const DegenerateSample&) {
      pc.r = std::numeric_limits<double>::quiet_NaN();
      pc.ci_half_width = std::numeric_limits<double>::quiet_NaN();
    }
    report.rows.push_back(std::move(pc));
  }
  return report;
}

/// The sweep CSV places axis columns between `seed` and `scenario`; those are
/// the natural correlation parameters when none are named explicitly.
inline std::vector<std::string> default_parameters(const CsvTable& table) {
  std::vector<std::string> params;
  const int from = table.column("seed");
  const int to = table.column("scenario");
  if (from < 0 || to < 0 || to <= from + 1) return params;
  for (int i = from + 1; i < to; ++i) params.push_back(table.header[i]);
  return params;
}

inline void emit_correlation_csv(const CorrelationReport& report, std::ostream& os) {
  using fgpe::detail::fmt_g17;
  os << "parameter,metric,r,samples,ci95_half_width\n";
  for (const auto& row : report.rows)
    os << detail::csv_escape(row.parameter) << ',' << detail::csv_escape(report.metric)
       << ',' << fmt_g17(row.r) << ',' << row.samples << ',' << fmt_g17(row.ci_half_width)
       << '\n';
}

}  // namespace fgpe
