#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "fgpe/errors.hpp"

namespace fgpe {

inline constexpr double kPi = std::numbers::pi_v<double>;

/// Minimum observer-target distance below which a bearing is undefined.
inline constexpr double kDegenerateRange = 1e-9;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double t) {
  double w = std::remainder(t, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// An SE(2) element. theta is kept in (-pi, pi] by every operation here;
/// aggregate-constructed poses should pass through normalized() once.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2 normalized() const { return {x, y, wrap_angle(theta)}; }
  Point2 position() const { return {x, y}; }
  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }
};

/// Range and body-frame bearing from an observer pose to a point.
struct RangeBearing {
  double range = 0.0;
  double bearing = 0.0;
};

struct Command {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

struct CircleObstacle {
  Point2 center{};
  double radius = 0.0;
};

/// Axis-aligned rectangle, used for arena bounds.
struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Point2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  Point2 clamp(const Point2& p) const {
    return {std::min(std::max(p.x, xmin), xmax), std::min(std::max(p.y, ymin), ymax)};
  }
};

/// Applies b in a's frame.
inline Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, wrap_angle(a.theta + b.theta)};
}

inline Pose2 inverse(const Pose2& p) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), wrap_angle(-p.theta)};
}

/// Relative transform d with compose(a, d) == b.
inline Pose2 between(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  const double dx = b.x - a.x, dy = b.y - a.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(b.theta - a.theta)};
}

inline RangeBearing range_bearing(const Pose2& observer, const Point2& target) {
  const double dx = target.x - observer.x, dy = target.y - observer.y;
  const double r = std::hypot(dx, dy);
  if (r <= kDegenerateRange)
    throw DegenerateGeometry("range_bearing: observer coincides with target");
  return {r, wrap_angle(std::atan2(dy, dx) - observer.theta)};
}

/// Partials of (range, bearing) w.r.t. observer (x, y, theta) and target (x, y).
///
/// min_range, when positive, floors the distance used in the denominators.
/// Near-coincident points otherwise produce entries of order 1/r and the
/// resulting normal equations become numerically singular; flooring bounds the
/// information a single observation can inject while leaving the residual (and
/// the Jacobians at ordinary ranges) untouched.
inline void range_bearing_jacobians(const Pose2& observer, const Point2& target,
                                    Eigen::Matrix<double, 2, 3>& j_observer,
                                    Eigen::Matrix<double, 2, 2>& j_target,
                                    double min_range = 0.0) {
  const double dx = target.x - observer.x, dy = target.y - observer.y;
  const double r = std::hypot(dx, dy);
  if (r <= kDegenerateRange && min_range <= kDegenerateRange)
    throw DegenerateGeometry("range_bearing_jacobians: observer coincides with target");
  const double rd = std::max(r, min_range);
  const double rd2 = rd * rd;
  j_observer << -dx / rd, -dy / rd, 0.0,
                 dy / rd2, -dx / rd2, -1.0;
  j_target << dx / rd, dy / rd,
             -dy / rd2, dx / rd2;
}

/// Forward-Euler unicycle step over one control period.
inline Pose2 advance_unicycle(const Pose2& pose, const Command& cmd, double dt) {
  return {pose.x + cmd.v * std::cos(pose.theta) * dt,
          pose.y + cmd.v * std::sin(pose.theta) * dt,
          wrap_angle(pose.theta + cmd.omega * dt)};
}

}  // namespace fgpe
