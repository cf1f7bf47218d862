#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fgpe/sim.hpp"

namespace fgpe {

/// Rendering options. The viewport transform is affine and fully determined
/// by these fields plus the arena rectangle, so consumers can map pixel
/// coordinates back to world coordinates exactly:
///   x_px = margin_px + (x - arena.xmin) * px_per_meter
///   y_px = margin_px + (arena.ymax - y) * px_per_meter   (y grows downward)
struct SvgOptions {
  double px_per_meter = 20.0;
  double margin_px = 20.0;
  double ellipse_scale = 1.0;  // ellipse radii in sigmas
  int ellipse_stride = 20;     // draw every Nth step's ellipse
};

inline double svg_x(double x, const Rect& arena, const SvgOptions& o) {
  return o.margin_px + (x - arena.xmin) * o.px_per_meter;
}

inline double svg_y(double y, const Rect& arena, const SvgOptions& o) {
  return o.margin_px + (arena.ymax - y) * o.px_per_meter;
}

namespace detail {

inline std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* pursuer_color(int i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};
  return palette[i % 8];
}

}  // namespace detail

/// Renders one episode: arena border, obstacles, the true evader path
/// (solid), each pursuer's true path (dashed), the estimated evader path
/// (dotted), uncertainty ellipses every `ellipse_stride` steps, and a capture
/// marker. Elements carry ids (evader-true, pursuer-N, estimate, capture) and
/// classes (obstacle, uncertainty) so the output is machine-checkable.
inline void emit_trace_svg(const EpisodeResult& result, const Scenario& scenario,
                           std::ostream& os, const SvgOptions& options = {}) {
  using detail::fmt_px;
  const Rect& arena = scenario.arena;
  const double width = 2.0 * options.margin_px + arena.width() * options.px_per_meter;
  const double height = 2.0 * options.margin_px + arena.height() * options.px_per_meter;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_px(width)
     << "\" height=\"" << fmt_px(height) << "\" viewBox=\"0 0 " << fmt_px(width) << ' '
     << fmt_px(height) << "\">\n";
  os << "  <rect x=\"" << fmt_px(svg_x(arena.xmin, arena, options)) << "\" y=\""
     << fmt_px(svg_y(arena.ymax, arena, options)) << "\" width=\""
     << fmt_px(arena.width() * options.px_per_meter) << "\" height=\""
     << fmt_px(arena.height() * options.px_per_meter)
     << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";

  for (const auto& ob : scenario.obstacles)
    os << "  <circle class=\"obstacle\" cx=\"" << fmt_px(svg_x(ob.center.x, arena, options))
       << "\" cy=\"" << fmt_px(svg_y(ob.center.y, arena, options)) << "\" r=\""
       << fmt_px(ob.radius * options.px_per_meter)
       << "\" fill=\"#bbbbbb\" stroke=\"#888888\"/>\n";

  // Gather per-agent paths from the trace.
  std::vector<std::pair<double, double>> evader_path;
  std::map<int, std::vector<std::pair<double, double>>> pursuer_paths;
  for (const auto& row : result.trace) {
    const std::pair<double, double> p{svg_x(row.pose.x, arena, options),
                                      svg_y(row.pose.y, arena, options)};
    if (row.kind == AgentKind::Evader)
      evader_path.push_back(p);
    else
      pursuer_paths[row.id].push_back(p);
  }

  auto polyline = [&os](const std::string& id, const char* color, const char* dash,
                        const std::vector<std::pair<double, double>>& pts) {
    if (pts.empty()) return;
    os << "  <polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color << '"';
    if (dash[0] != '\0') os << " stroke-dasharray=\"" << dash << '"';
    os << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) os << ' ';
      os << fmt_px(pts[i].first) << ',' << fmt_px(pts[i].second);
    }
    os << "\"/>\n";
  };

  for (const auto& [id, pts] : pursuer_paths)
    polyline("pursuer-" + std::to_string(id), detail::pursuer_color(id), "6,4", pts);
  polyline("evader-true", "#d62728", "", evader_path);

  if (!result.estimate_path.empty()) {
    std::vector<std::pair<double, double>> est;
    for (const auto& p : result.estimate_path)
      est.push_back({svg_x(p.x, arena, options), svg_y(p.y, arena, options)});
    polyline("estimate", "#17becf", "2,3", est);

    const int stride = std::max(1, options.ellipse_stride);
    for (std::size_t i = 0; i < result.estimate_cov.size(); i += stride) {
      const auto& c = result.estimate_cov[i];  // xx, xy, yy
      const double tr = c[0] + c[2];
      const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * (c[0] * c[2] - c[1] * c[1])));
      const double l1 = std::max(0.0, 0.5 * (tr + disc));
      const double l2 = std::max(0.0, 0.5 * (tr - disc));
      // Principal-axis angle in world coordinates; the y flip negates it in
      // pixel coordinates.
      const double angle = 0.5 * std::atan2(2.0 * c[1], c[0] - c[2]);
      const double rx = std::sqrt(l1) * options.ellipse_scale * options.px_per_meter;
      const double ry = std::sqrt(l2) * options.ellipse_scale * options.px_per_meter;
      const Pose2& p = result.estimate_path[i];
      const double cx = svg_x(p.x, arena, options);
      const double cy = svg_y(p.y, arena, options);
      os << "  <ellipse class=\"uncertainty\" cx=\"" << fmt_px(cx) << "\" cy=\""
         << fmt_px(cy) << "\" rx=\"" << fmt_px(rx) << "\" ry=\"" << fmt_px(ry)
         << "\" transform=\"rotate(" << fmt_px(-angle * 180.0 / kPi) << ' ' << fmt_px(cx)
         << ' ' << fmt_px(cy)
         << ")\" fill=\"none\" stroke=\"#17becf\" stroke-opacity=\"0.5\"/>\n";
    }
  }

  if (result.captured && !evader_path.empty())
    os << "  <circle id=\"capture\" cx=\"" << fmt_px(evader_path.back().first)
       << "\" cy=\"" << fmt_px(evader_path.back().second)
       << "\" r=\"6\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";

  os << "</svg>\n";
}

/// Simple line chart: one polyline per named series over the sample index.
/// Useful for per-step quantities such as ellipse area or estimate error.
inline void emit_series_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& series,
    std::ostream& os) {
  using detail::fmt_px;
  const double width = 640.0, height = 360.0, margin = 45.0;

  std::size_t max_len = 0;
  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& [name, values] : series) {
    max_len = std::max(max_len, values.size());
    for (double v : values) {
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (hi <= lo) hi = lo + 1.0;  // flat data still renders

  const double plot_w = width - 2.0 * margin, plot_h = height - 2.0 * margin;
  auto px = [&](std::size_t i) {
    return margin + (max_len > 1 ? plot_w * static_cast<double>(i) /
                                       static_cast<double>(max_len - 1)
                                 : 0.0);
  };
  auto py = [&](double v) { return height - margin - plot_h * (v - lo) / (hi - lo); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_px(width)
     << "\" height=\"" << fmt_px(height) << "\" viewBox=\"0 0 " << fmt_px(width) << ' '
     << fmt_px(height) << "\">\n";
  os << "  <rect x=\"" << fmt_px(margin) << "\" y=\"" << fmt_px(margin) << "\" width=\""
     << fmt_px(plot_w) << "\" height=\"" << fmt_px(plot_h)
     << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";
  os << "  <text x=\"4\" y=\"" << fmt_px(margin + 4.0) << "\" font-size=\"11\">"
     << fmt_px(hi) << "</text>\n";
  os << "  <text x=\"4\" y=\"" << fmt_px(height - margin) << "\" font-size=\"11\">"
     << fmt_px(lo) << "</text>\n";

  int idx = 0;
  for (const auto& [name, values] : series) {
    if (!values.empty()) {
      os << "  <polyline id=\"series-" << idx << "\" fill=\"none\" stroke=\""
         << detail::pursuer_color(idx) << "\" points=\"";
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ' ';
        os << fmt_px(px(i)) << ',' << fmt_px(py(values[i]));
      }
      os << "\"/>\n";
    }
    os << "  <text x=\"" << fmt_px(margin + 6.0) << "\" y=\""
       << fmt_px(margin + 14.0 + 14.0 * idx) << "\" font-size=\"11\" fill=\""
       << detail::pursuer_color(idx) << "\">" << name << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
}

}  // namespace fgpe
