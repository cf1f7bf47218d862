#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fgpe/errors.hpp"
#include "fgpe/stats.hpp"

using namespace fgpe;
using Catch::Approx;

TEST_CASE("pearson recovers exact correlations", "[stats]") {
  SECTION("a perfect linear relation gives exactly +1") {
    CHECK(pearson({1, 2, 3, 4, 5}, {10, 20, 30, 40, 50}) == 1.0);
  }
  SECTION("a perfect inverse relation gives exactly -1") {
    CHECK(pearson({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}) == -1.0);
  }
  SECTION("hand-computed value") {
    // Deviations are (+-0.5, +-1.5) on both sides: covariance sum 3,
    // variance sums 5 and 5, so r = 3 / sqrt(25) = 0.6 with no rounding.
    CHECK(pearson({1, 2, 3, 4}, {2, 1, 4, 3}) == 0.6);
  }
}

TEST_CASE("pearson is affine invariant up to sign", "[stats]") {
  const std::vector<double> xs = {0.3, -1.7, 2.2, 0.9, -0.4, 1.1};
  const std::vector<double> ys = {1.0, 0.2, -0.5, 2.4, 0.8, -1.3};
  const double r = pearson(xs, ys);

  std::vector<double> ax, cy;
  for (double x : xs) ax.push_back(2.5 * x - 7.0);
  for (double y : ys) cy.push_back(-0.3 * y + 11.0);
  // One negative scale flips the sign; magnitudes agree to rounding.
  CHECK(pearson(ax, cy) == Approx(-r).margin(1e-12));

  std::vector<double> ax2;
  for (double x : xs) ax2.push_back(-4.0 * x + 0.5);
  CHECK(pearson(ax2, cy) == Approx(r).margin(1e-12));
}

TEST_CASE("pearson rejects degenerate samples", "[stats]") {
  CHECK_THROWS_AS(pearson({1, 2, 3}, {1, 2}), DegenerateSample);
  CHECK_THROWS_AS(pearson({1}, {2}), DegenerateSample);
  CHECK_THROWS_AS(pearson({}, {}), DegenerateSample);
  CHECK_THROWS_AS(pearson({3, 3, 3}, {1, 2, 3}), DegenerateSample);
  CHECK_THROWS_AS(pearson({1, 2, 3}, {7, 7, 7}), DegenerateSample);
}

TEST_CASE("Fisher confidence interval behaves", "[stats]") {
  SECTION("r = 0 gives the symmetric tanh band") {
    const double se = 1.96 / std::sqrt(97.0);
    CHECK(fisher_ci_half_width(0.0, 100) == Approx(std::tanh(se)).margin(1e-15));
  }
  SECTION("more samples shrink the interval") {
    const double w10 = fisher_ci_half_width(0.5, 10);
    const double w100 = fisher_ci_half_width(0.5, 100);
    const double w1000 = fisher_ci_half_width(0.5, 1000);
    CHECK(w100 < w10);
    CHECK(w1000 < w100);
  }
  SECTION("the reported arm covers both sides of the asymmetric interval") {
    const double r = 0.8;
    const std::size_t n = 20;
    const double z = std::atanh(r), se = 1.96 / std::sqrt(17.0);
    const double w = fisher_ci_half_width(r, n);
    CHECK(w >= std::tanh(z + se) - r - 1e-15);
    CHECK(w >= r - std::tanh(z - se) - 1e-15);
  }
  SECTION("interval collapses at |r| = 1") {
    CHECK(fisher_ci_half_width(1.0, 50) == 0.0);
    CHECK(fisher_ci_half_width(-1.0, 50) == 0.0);
  }
  SECTION("too few samples") {
    CHECK_THROWS_AS(fisher_ci_half_width(0.5, 3), DegenerateSample);
  }
}

TEST_CASE("median and mean", "[stats]") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
  CHECK_THROWS_AS(median({}), DegenerateSample);

  CHECK(mean({1.0, 2.0, 3.0, 4.0}) == 2.5);
  CHECK_THROWS_AS(mean({}), DegenerateSample);
}
