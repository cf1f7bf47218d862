// fgpe: run pursuit-evasion episodes, sweep parameters, compare strategies,
// correlate sweep outputs, and render traces.
//
// Exit codes: 0 success, 1 episode failure, 2 configuration error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgpe/scenario_io.hpp"
#include "fgpe/stats.hpp"
#include "fgpe/svg.hpp"
#include "fgpe/sweep.hpp"

namespace {

fgpe::Scenario load_or_default(const std::string& path) {
  if (path.empty()) return fgpe::Scenario{};
  return fgpe::load_scenario(path);
}

// "path=v1,v2,..." -> axis
fgpe::SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw fgpe::ValidationError("--axis expects path=v1,v2,... got '" + text + "'");
  fgpe::SweepAxis axis;
  axis.path = text.substr(0, eq);
  std::stringstream vals(text.substr(eq + 1));
  std::string tok;
  while (std::getline(vals, tok, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      axis.values.push_back(v);
    } catch (const std::exception&) {
      throw fgpe::ValidationError("--axis value '" + tok + "' is not a number");
    }
  }
  if (axis.values.empty())
    throw fgpe::ValidationError("--axis '" + axis.path + "' lists no values");
  return axis;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void ensure_parent_dir(const std::string& file_path) {
  const std::filesystem::path parent = std::filesystem::path(file_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed_opt,
            const std::string& out_dir, const std::string& format) {
  const fgpe::Scenario sc = load_or_default(scenario_path);
  const std::uint64_t seed = seed_opt.value_or(sc.seed);

  const auto t0 = std::chrono::steady_clock::now();
  const fgpe::EpisodeResult result = fgpe::run_episode(sc, seed);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  std::cout << "scenario=" << result.scenario_name
            << " strategy=" << fgpe::to_string(result.strategy) << " seed=" << result.seed
            << " pursuers=" << result.num_pursuers << " captured=" << result.captured
            << " capture_step=" << result.capture_step
            << " capture_time=" << result.capture_time << " steps=" << result.steps_run
            << '\n';
  if (result.strategy == fgpe::StrategyKind::FactorGraph)
    std::cout << "solver: iterations=" << result.solve.total_iterations
              << " accepted=" << result.solve.total_accepted
              << " max_step_iterations=" << result.solve.max_iterations_step
              << " final_cost=" << result.solve.final_cost
              << " variables=" << result.solve.final_variables
              << " factors=" << result.solve.final_factors << '\n';
  // Wall time goes to the console only; stored artifacts stay byte-stable.
  std::cout << "wall_ms=" << wall_ms << '\n';

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
      fgpe::RunRecord rec = fgpe::detail::summarize(result);
      rec.seed = result.seed;
      std::ofstream csv(dir / "result.csv");
      fgpe::emit_csv({rec}, {}, csv);
    }
    {
      std::ofstream trace(dir / "trace.txt");
      fgpe::dump_trace(result, trace);
    }
    if (format == "svg") {
      std::ofstream svg(dir / "trace.svg");
      fgpe::emit_trace_svg(result, sc, svg);
    }
    std::cout << "wrote " << (dir / "result.csv").string() << ", "
              << (dir / "trace.txt").string()
              << (format == "svg" ? ", " + (dir / "trace.svg").string() : "") << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::vector<std::string>& axis_args,
              int seeds, int workers, std::size_t budget, const std::string& out_dir) {
  fgpe::SweepSpec spec;
  spec.base = load_or_default(scenario_path);
  for (const auto& a : axis_args) spec.axes.push_back(parse_axis(a));
  spec.seeds_per_cell = seeds;
  spec.parallelism = workers;
  spec.budget = budget;

  const fgpe::SweepResult result = fgpe::run_sweep(spec, out_dir);
  std::cout << "sweep: " << result.records.size() << " episodes, " << result.failures
            << " failed; summary at "
            << (std::filesystem::path(out_dir) / "summary.csv").string() << '\n';
  return result.failures > 0 ? 1 : 0;
}

int cmd_compare(const std::string& scenario_path, const std::string& ratios_arg,
                int seeds, const std::string& out_path) {
  const fgpe::Scenario base = load_or_default(scenario_path);
  std::vector<double> ratios;
  for (const auto& tok : split_list(ratios_arg)) ratios.push_back(std::stod(tok));
  if (ratios.empty()) throw fgpe::ValidationError("--ratios lists no values");
  if (seeds < 1) throw fgpe::ValidationError("--seeds must be >= 1");

  // Speed ratio = pursuer top speed / evader nominal speed; the evader's
  // nominal speed is its commanded speed (scripted paths) or its DWA cap.
  const double evader_speed = base.evader.kind == fgpe::TrajectoryKind::DwaGoal
                                  ? base.evader.dwa.v_max
                                  : base.evader.speed;
  if (!(evader_speed > 0.0))
    throw fgpe::ValidationError("compare needs a positive evader speed");

  const fgpe::StrategyKind strategies[] = {fgpe::StrategyKind::FactorGraph,
                                           fgpe::StrategyKind::PurePursuit,
                                           fgpe::StrategyKind::ConstantBearing};
  std::vector<fgpe::RunRecord> records;
  int failures = 0;
  int cell = 0;
  for (const auto strategy : strategies) {
    for (const double ratio : ratios) {
      int captures = 0;
      std::vector<double> capture_times;
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(s);
        fgpe::RunRecord rec;
        rec.cell = cell;
        rec.seed = seed;
        rec.params = {{"speed_ratio", ratio}};
        try {
          fgpe::Scenario sc = base;
          sc.strategy = strategy;
          sc.pursuer_v_max = ratio * evader_speed;
          const fgpe::EpisodeResult result = fgpe::run_episode(sc, seed);
          fgpe::RunRecord summary = fgpe::detail::summarize(result);
          summary.cell = rec.cell;
          summary.seed = rec.seed;
          summary.params = rec.params;
          rec = summary;
          if (result.captured) {
            ++captures;
            capture_times.push_back(result.capture_time);
          }
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.error = e.what();
          rec.strategy = fgpe::to_string(strategy);
          ++failures;
        }
        records.push_back(rec);
      }
      std::cout << fgpe::to_string(strategy) << " ratio=" << ratio << ": " << captures
                << '/' << seeds << " captured";
      if (!capture_times.empty())
        std::cout << ", median capture time " << fgpe::median(capture_times) << " s";
      std::cout << '\n';
      ++cell;
    }
  }

  if (!out_path.empty()) {
    ensure_parent_dir(out_path);
    std::ofstream csv(out_path);
    fgpe::emit_csv(records, {"speed_ratio"}, csv);
    std::cout << "wrote " << out_path << '\n';
  }
  return failures > 0 ? 1 : 0;
}

int cmd_correlate(const std::string& in_path, const std::string& metric,
                  const std::string& params_arg, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw fgpe::ParseError(0, 0, "cannot open CSV file '" + in_path + "'");
  const fgpe::CsvTable table = fgpe::read_csv(in);

  std::vector<std::string> params = split_list(params_arg);
  if (params.empty()) params = fgpe::default_parameters(table);
  if (params.empty())
    throw fgpe::ValidationError(
        "no parameter columns found; pass --params or use a sweep CSV");

  const fgpe::CorrelationReport report = fgpe::correlate_table(table, params, metric);
  if (!out_path.empty()) {
    ensure_parent_dir(out_path);
    std::ofstream out(out_path);
    fgpe::emit_correlation_csv(report, out);
    std::cout << "wrote " << out_path << '\n';
  } else {
    fgpe::emit_correlation_csv(report, std::cout);
  }
  return 0;
}

int cmd_plot(const std::string& scenario_path, std::optional<std::uint64_t> seed_opt,
             const std::string& out_path, bool series, double ellipse_scale,
             int ellipse_stride) {
  const fgpe::Scenario sc = load_or_default(scenario_path);
  const std::uint64_t seed = seed_opt.value_or(sc.seed);
  const fgpe::EpisodeResult result = fgpe::run_episode(sc, seed);

  ensure_parent_dir(out_path);
  std::ofstream out(out_path);
  if (!out) throw fgpe::ValidationError("cannot open output file '" + out_path + "'");
  if (series) {
    std::vector<std::pair<std::string, std::vector<double>>> chart;
    if (!result.ellipse_areas.empty())
      chart.emplace_back("ellipse_area", result.ellipse_areas);
    if (!result.estimate_errors.empty())
      chart.emplace_back("estimate_error", result.estimate_errors);
    if (chart.empty())
      throw fgpe::ValidationError(
          "series plot needs the factor-graph strategy (no per-step series recorded)");
    fgpe::emit_series_svg(chart, out);
  } else {
    fgpe::SvgOptions options;
    options.ellipse_scale = ellipse_scale;
    options.ellipse_stride = ellipse_stride;
    fgpe::emit_trace_svg(result, sc, out, options);
  }
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factor-graph pursuit-evasion toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, out_arg, format = "csv";
  std::optional<std::uint64_t> seed_opt;
  int workers = 1;

  auto add_common = [&](CLI::App* cmd, bool scenario_required) {
    auto* opt = cmd->add_option("--scenario", scenario_path, "scenario JSON file");
    if (scenario_required) opt->required();
    cmd->add_option("--seed", seed_opt, "episode seed (default: scenario seed)");
  };

  CLI::App* run = app.add_subcommand("run", "run one episode");
  add_common(run, false);
  run->add_option("--out", out_arg, "directory for result.csv and trace.txt");
  run->add_option("--format", format, "csv|svg: also render trace.svg with svg")
      ->check(CLI::IsMember({"csv", "svg"}));

  CLI::App* sweep = app.add_subcommand("sweep", "cartesian parameter sweep");
  add_common(sweep, false);
  std::vector<std::string> axis_args;
  int seeds = 1;
  std::size_t budget = 10000;
  sweep->add_option("--axis", axis_args, "swept parameter, path=v1,v2,... (repeatable)");
  sweep->add_option("--seeds", seeds, "seeds per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--budget", budget,
                    "episode cap (FGPE_BUDGET environment variable overrides)");
  sweep->add_option("--out", out_arg, "output directory")->required();

  CLI::App* compare = app.add_subcommand(
      "compare", "factor_graph vs pure_pursuit vs constant_bearing across speed ratios");
  add_common(compare, false);
  std::string ratios_arg = "1.05";
  compare->add_option("--ratios", ratios_arg, "speed ratios, comma separated");
  compare->add_option("--seeds", seeds, "seeds per configuration")
      ->check(CLI::PositiveNumber);
  compare->add_option("--out", out_arg, "CSV output file");

  CLI::App* correlate =
      app.add_subcommand("correlate", "Pearson correlation report from a sweep CSV");
  std::string in_path, metric = "capture_time", params_arg;
  correlate->add_option("--in", in_path, "input CSV (a sweep summary)")->required();
  correlate->add_option("--metric", metric, "metric column");
  correlate->add_option("--params", params_arg,
                        "parameter columns, comma separated (default: sweep axes)");
  correlate->add_option("--out", out_arg, "CSV output file (default: stdout)");

  CLI::App* plot = app.add_subcommand("plot", "rerun an episode and render SVG");
  add_common(plot, false);
  bool series = false;
  double ellipse_scale = 1.0;
  int ellipse_stride = 20;
  plot->add_option("--out", out_arg, "SVG output file")->required();
  plot->add_flag("--series", series, "plot per-step series instead of the trajectory map");
  plot->add_option("--ellipse-scale", ellipse_scale, "uncertainty ellipse radius, sigmas");
  plot->add_option("--ellipse-stride", ellipse_stride, "steps between ellipses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0; bad flags are config errors
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, seed_opt, out_arg, format);
    if (sweep->parsed())
      return cmd_sweep(scenario_path, axis_args, seeds, workers, budget, out_arg);
    if (compare->parsed()) return cmd_compare(scenario_path, ratios_arg, seeds, out_arg);
    if (correlate->parsed()) return cmd_correlate(in_path, metric, params_arg, out_arg);
    if (plot->parsed())
      return cmd_plot(scenario_path, seed_opt, out_arg, series, ellipse_scale,
                      ellipse_stride);
  } catch (const fgpe::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fgpe::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fgpe::DegenerateSample& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fgpe::EpisodeAborted& e) {
    std::cerr << "episode failed at step " << e.step() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
