#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fgpe/errors.hpp"

namespace fgpe {

/// Sample Pearson correlation coefficient. Requires at least two samples and
/// nonzero variance on both sides; anything else is a DegenerateSample, not a
/// silent NaN.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw DegenerateSample("pearson: size mismatch (" + std::to_string(xs.size()) +
                           " vs " + std::to_string(ys.size()) + ")");
  const std::size_t n = xs.size();
  if (n < 2) throw DegenerateSample("pearson: need at least 2 samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DegenerateSample("pearson: zero variance in xs");
  if (syy == 0.0) throw DegenerateSample("pearson: zero variance in ys");
  // Clamp: rounding can push a perfectly collinear sample a ulp past 1.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Half-width of the 95% confidence interval for a Pearson r with n samples,
/// via the Fisher z-transform: delta = tanh(atanh(r) + 1.96/sqrt(n-3)) - r on
/// the high side (the interval is asymmetric in r; we report the larger arm
/// so the reported band always covers the true interval).
inline double fisher_ci_half_width(double r, std::size_t n) {
  if (n < 4) throw DegenerateSample("fisher_ci_half_width: need at least 4 samples");
  if (!(r > -1.0 && r < 1.0)) return 0.0;  // interval collapses at |r| = 1
  const double z = std::atanh(r);
  const double se = 1.96 / std::sqrt(static_cast<double>(n - 3));
  const double hi = std::tanh(z + se) - r;
  const double lo = r - std::tanh(z - se);
  return std::max(hi, lo);
}

/// Median; averages the two middle elements for even sizes.
inline double median(std::vector<double> xs) {
  if (xs.empty()) throw DegenerateSample("median: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw DegenerateSample("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// One row of a correlation study: how strongly one swept parameter tracks
/// the chosen outcome metric across episodes.
struct ParameterCorrelation {
  std::string parameter;
  double r = 0.0;
  std::size_t samples = 0;
  double ci_half_width = 0.0;  // 95%, Fisher z
};

struct CorrelationReport {
  std::string metric;
  std::vector<ParameterCorrelation> rows;
};

}  // namespace fgpe
