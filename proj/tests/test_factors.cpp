#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "fgpe/factor_graph.hpp"
#include "fgpe/rng.hpp"
#include "support/finite_diff.hpp"

using namespace fgpe;
using Catch::Approx;

namespace {

// Packs the factor's keys into one parameter vector, evaluates the weighted
// residual, and compares the analytic Jacobian blocks to central differences.
void check_factor_jacobian(const Factor& f, const Values& values, double tol = 1e-5) {
  Eigen::VectorXd x0(3 * f.num_keys);
  for (int k = 0; k < f.num_keys; ++k) {
    const Pose2& p = values.at(f.keys[k]);
    x0.segment<3>(3 * k) << p.x, p.y, p.theta;
  }
  auto fn = [&](const Eigen::VectorXd& x) {
    Values v = values;
    for (int k = 0; k < f.num_keys; ++k)
      v[f.keys[k]] = Pose2{x[3 * k], x[3 * k + 1], x[3 * k + 2]};
    return evaluate_factor(f, v);
  };
  const Eigen::MatrixXd fd = finite_difference_jacobian(fn, x0);

  std::array<Eigen::Matrix<double, 3, 3>, 2> jac;
  evaluate_factor(f, values, &jac);
  for (int k = 0; k < f.num_keys; ++k)
    for (int r = 0; r < f.residual_dim(); ++r)
      for (int c = 0; c < 3; ++c) {
        const double expected = fd(r, 3 * k + c);
        INFO("kind=" << kind_name(f.kind) << " key=" << k << " row=" << r
                     << " col=" << c);
        REQUIRE(jac[k](r, c) ==
                Approx(expected).margin(tol * std::max(1.0, std::abs(expected))));
      }
}

Pose2 random_pose(NoiseStream& s, double span = 5.0) {
  return {s.uniform(-span, span), s.uniform(-span, span), s.uniform(-kPi, kPi)};
}

InformationWeights unit_weights() {
  InformationWeights w;
  w.sigma_dx = w.sigma_dy = w.sigma_dtheta = 1.0;
  w.sigma_range = w.sigma_bearing = 1.0;
  w.sigma_cpx = w.sigma_cpy = w.sigma_opx = w.sigma_opy = 1.0;
  return w;
}

}  // namespace

TEST_CASE("prior residual is the local deviation over sigma", "[factors]") {
  Values v;
  const VariableKey key = evader_key(0);
  v[key] = Pose2{0.0, 3.0, kPi / 2.0 + 0.1};

  Factor f = make_prior(key, Pose2{1.0, 2.0, kPi / 2.0}, {0.1, 0.2, 0.05});
  const Eigen::VectorXd r = residual(f, v);
  REQUIRE(r.size() == 3);
  // World offset (-1, 1) seen from a frame rotated by pi/2 is (1, 1).
  CHECK(r[0] == Approx(1.0 / 0.1));
  CHECK(r[1] == Approx(1.0 / 0.2));
  CHECK(r[2] == Approx(0.1 / 0.05));
}

TEST_CASE("dynamics residual compares relative motion to the payload", "[factors]") {
  Values v;
  const VariableKey a = pursuer_key(0, 0), b = pursuer_key(0, 1);
  v[a] = Pose2{0, 0, 0};
  v[b] = Pose2{1.0, 0.5, 0.2};

  InformationWeights w;  // defaults: 0.1, 0.1, 0.01
  Factor f = make_dynamics(FactorKind::DynamicsPursuer, a, b, Pose2{1.0, 0.0, 0.0}, w, 1);
  const Eigen::VectorXd r = residual(f, v);
  CHECK(r[0] == Approx(0.0).margin(1e-15));
  CHECK(r[1] == Approx(0.5 / 0.1));
  CHECK(r[2] == Approx(0.2 / 0.01));

  SECTION("zero residual when the motion matches exactly") {
    const Pose2 motion{0.3, -0.1, 0.7};
    Values exact;
    exact[a] = Pose2{2.0, 1.0, 1.1};
    exact[b] = compose(exact[a], motion);
    Factor g = make_dynamics(FactorKind::DynamicsEvader, a, b, motion, w, 1);
    CHECK(residual(g, exact).norm() == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("range-bearing residual against a tracked point", "[factors]") {
  Values v;
  const VariableKey p = pursuer_key(0, 0), q = evader_key(0);
  v[p] = Pose2{0, 0, 0};
  v[q] = Pose2{3.0, 4.0, 0.7};

  InformationWeights w;  // sigma_range 10, sigma_bearing 0.05
  Factor f = make_measure_evader(p, q, RangeBearing{6.0, 1.0}, w, 0);
  const Eigen::VectorXd r = residual(f, v);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == Approx((6.0 - 5.0) / 10.0));
  CHECK(r[1] == Approx((1.0 - std::atan2(4.0, 3.0)) / 0.05));

  SECTION("bearing innovation wraps") {
    Factor g = make_measure_evader(p, q, RangeBearing{5.0, kPi - 0.1}, w, 0);
    Values behind = v;
    behind[q] = Pose2{-3.0, -4.0, 0.0};  // true bearing atan2(-4,-3), near -pi
    const double predicted = std::atan2(-4.0, -3.0);
    const Eigen::VectorXd rb = residual(g, behind);
    CHECK(rb[1] == Approx(wrap_angle(kPi - 0.1 - predicted) / 0.05));
    CHECK(std::abs(rb[1]) < kPi / 0.05);  // wrapped, not off by 2*pi
  }

  SECTION("fixed-landmark variant reads the stored point") {
    Factor g = make_measure_obstacle(p, Point2{3.0, 4.0}, RangeBearing{6.0, 1.0}, w, 0);
    const Eigen::VectorXd ro = residual(g, v);
    CHECK(ro[0] == Approx(r[0]));
    CHECK(ro[1] == Approx(r[1]));
  }
}

TEST_CASE("near-coincident estimates keep the measurement factor bounded", "[factors]") {
  // Estimated poses can collapse onto each other mid-solve (the planning
  // factor pulls them together); the linearization must stay finite so the
  // normal equations remain factorable.
  Values v;
  const VariableKey p = pursuer_key(0, 0), q = evader_key(0);
  v[p] = Pose2{1.0, 2.0, 0.3};
  InformationWeights w;
  const Factor f = make_measure_evader(p, q, RangeBearing{2.0, 0.4}, w, 0);

  SECTION("separation far below the floor") {
    v[q] = Pose2{1.0 + 3e-7, 2.0 + 4e-7, 0.0};  // 0.5 um apart
    std::array<Eigen::Matrix<double, 3, 3>, 2> jac;
    const Eigen::VectorXd r = evaluate_factor(f, v, &jac);
    REQUIRE(r.allFinite());
    // Denominators are floored at kMinLinearizationRange, so no entry can
    // exceed 1 / (floor * sigma); unfloored it would be ~1/(r*sigma) ~ 1e6.
    const double bound = 1.0 / (kMinLinearizationRange * w.sigma_bearing) + 1.0;
    for (const auto& j : jac) {
      REQUIRE(j.allFinite());
      CHECK(j.cwiseAbs().maxCoeff() <= bound);
    }
  }

  SECTION("exact coincidence scores only the range surprise") {
    v[q] = Pose2{1.0, 2.0, 0.0};
    std::array<Eigen::Matrix<double, 3, 3>, 2> jac;
    Eigen::VectorXd r;
    REQUIRE_NOTHROW(r = evaluate_factor(f, v, &jac));
    CHECK(r[0] == Approx(2.0 / w.sigma_range));
    CHECK(r[1] == 0.0);  // direction is unobservable here, not infinitely wrong
    for (const auto& j : jac) REQUIRE(j.allFinite());
  }

  SECTION("at ordinary range the floor is inert") {
    v[q] = Pose2{2.0, 3.5, 0.0};  // 1.8 m apart, far above the floor
    check_factor_jacobian(f, v);
  }
}

TEST_CASE("planning residual pulls the planned pose onto the target", "[factors]") {
  Values v;
  const VariableKey q = evader_key(3), p = pursuer_key(1, 4);
  v[q] = Pose2{1.0, 2.0, 0.3};
  v[p] = Pose2{4.0, 6.0, -1.0};
  Factor f = make_planning(q, p, 10.0, 3);
  const Eigen::VectorXd r = residual(f, v);
  CHECK(r[0] == Approx(-0.3));
  CHECK(r[1] == Approx(-0.4));
}

TEST_CASE("robot-robot hinge activates only inside d_safe", "[factors]") {
  Values v;
  const VariableKey a = pursuer_key(0, 5), b = pursuer_key(1, 5);
  v[a] = Pose2{0, 0, 0};

  Factor f = make_collision_avoid(a, b, 0.6, 0.61, 1.0, 5);

  v[b] = Pose2{0.4, 0.0, 1.0};
  CHECK(residual(f, v)[0] == Approx(1.0 - 0.4 / 0.61));

  v[b] = Pose2{0.7, 0.0, 1.0};
  CHECK(residual(f, v)[0] == 0.0);

  v[b] = Pose2{0.6, 0.0, 1.0};  // boundary counts as inactive
  CHECK(residual(f, v)[0] == 0.0);

  SECTION("jacobian is zero on the inactive side") {
    v[b] = Pose2{0.9, 0.2, 0.0};
    std::array<Eigen::Matrix<double, 3, 3>, 2> jac;
    evaluate_factor(f, v, &jac);
    CHECK(jac[0].norm() == 0.0);
    CHECK(jac[1].norm() == 0.0);
  }
}

TEST_CASE("robot-obstacle hinge uses surface distance", "[factors]") {
  Values v;
  const VariableKey a = pursuer_key(0, 2);
  v[a] = Pose2{0, 0, 0};

  // Center at distance 1, radius 0.5 -> surface distance 0.5 < 0.6.
  Factor f = make_obstacle_avoid(a, Point2{1.0, 0.0}, 0.5, 0.6, 0.3, 1.0, 2);
  CHECK(residual(f, v)[0] == Approx(1.0 - 0.5 / 0.3));

  v[a] = Pose2{-0.2, 0.0, 0.0};  // surface distance 0.7: inactive
  CHECK(residual(f, v)[0] == 0.0);
}

TEST_CASE("analytic jacobians match central differences", "[factors]") {
  NoiseStream s(31, 0, 0, NoisePurpose::InitPlacement);
  const InformationWeights w;  // asymmetric default sigmas exercise the scaling

  for (int trial = 0; trial < 50; ++trial) {
    Values v;
    const VariableKey a = pursuer_key(0, 0), b = pursuer_key(1, 0), q = evader_key(0);
    v[a] = random_pose(s);
    v[b] = random_pose(s);
    v[q] = random_pose(s);

    check_factor_jacobian(make_prior(a, random_pose(s), {0.1, 0.2, 0.05}), v);
    check_factor_jacobian(
        make_dynamics(FactorKind::DynamicsPursuer, a, b, random_pose(s, 1.0), w, 1), v);
    check_factor_jacobian(make_planning(q, b, 10.0, 0), v);

    // Keep the observer clear of the target so range stays regular.
    Values vm = v;
    vm[q] = Pose2{v[a].x + s.uniform(1.0, 6.0), v[a].y + s.uniform(1.0, 6.0),
                  s.uniform(-kPi, kPi)};
    check_factor_jacobian(make_measure_evader(a, q, RangeBearing{3.0, 0.4}, w, 0), vm);
    check_factor_jacobian(
        make_measure_obstacle(a, Point2{v[a].x + 2.0, v[a].y - 1.5},
                              RangeBearing{2.0, -0.3}, w, 0),
        vm);
  }

  SECTION("active hinges, clear of the boundary") {
    NoiseStream h(37, 0, 0, NoisePurpose::InitPlacement);
    for (int trial = 0; trial < 50; ++trial) {
      Values v;
      const VariableKey a = pursuer_key(0, 0), b = pursuer_key(1, 0);
      v[a] = random_pose(h);
      const double d = h.uniform(0.1, 0.5);  // inside d_safe=0.6 with margin
      const double ang = h.uniform(-kPi, kPi);
      v[b] = Pose2{v[a].x + d * std::cos(ang), v[a].y + d * std::sin(ang),
                   h.uniform(-kPi, kPi)};
      check_factor_jacobian(make_collision_avoid(a, b, 0.6, 0.61, 0.7, 0), v);

      const double od = h.uniform(0.8, 1.0);  // surface distance 0.3..0.5
      const Point2 center{v[a].x + od * std::cos(ang), v[a].y + od * std::sin(ang)};
      check_factor_jacobian(make_obstacle_avoid(a, center, 0.5, 0.6, 0.3, 0.9, 0), v);
    }
  }
}

TEST_CASE("graph rejects factors on unknown variables", "[factors]") {
  FactorGraph g;
  g.add_variable(evader_key(0), Pose2{});
  CHECK_THROWS_AS(
      g.add_factor(make_planning(evader_key(0), pursuer_key(0, 1), 10.0, 0)),
      UnknownVariable);
  Values v;
  CHECK_THROWS_AS(residual(make_prior(evader_key(1), Pose2{}, {1, 1, 1}), v),
                  UnknownVariable);
}

TEST_CASE("total cost is the sum of squared weighted residuals", "[factors]") {
  FactorGraph g;
  g.add_variable(evader_key(0), Pose2{1.0, 0.0, 0.0});
  g.add_factor(make_prior(evader_key(0), Pose2{0.0, 0.0, 0.0}, {0.5, 1.0, 1.0}));
  // Residual (2, 0, 0) -> cost 4.
  CHECK(g.total_cost() == Approx(4.0));
  g.add_variable(evader_key(1), Pose2{1.0, 1.0, 0.0});
  InformationWeights w = unit_weights();
  g.add_factor(
      make_dynamics(FactorKind::DynamicsEvader, evader_key(0), evader_key(1), Pose2{}, w, 1));
  // Motion (0, 1, 0) against a zero payload adds 1.
  CHECK(g.total_cost() == Approx(5.0));
}

TEST_CASE("factor census groups counts by the step they were added", "[factors]") {
  FactorGraph g;
  InformationWeights w;
  g.add_variable(evader_key(0), Pose2{});
  g.add_variable(pursuer_key(0, 0), Pose2{1, 0, 0});
  g.add_variable(pursuer_key(0, 1), Pose2{1, 0, 0});

  g.add_factor(make_prior(evader_key(0), Pose2{}, {1, 1, 1}, 0));
  g.add_factor(make_prior(pursuer_key(0, 0), Pose2{1, 0, 0}, {1, 1, 1}, 0));
  g.add_factor(make_measure_evader(pursuer_key(0, 0), evader_key(0),
                                   RangeBearing{1.0, 0.0}, w, 0));
  g.add_factor(make_planning(evader_key(0), pursuer_key(0, 1), 10.0, 0));
  g.add_factor(make_dynamics(FactorKind::DynamicsPursuer, pursuer_key(0, 0),
                             pursuer_key(0, 1), Pose2{}, w, 1));

  const auto census = factor_census(g);
  REQUIRE(census.size() == 2);
  CHECK(census.at(0).prior == 2);
  CHECK(census.at(0).meas_evader == 1);
  CHECK(census.at(0).plan == 1);
  CHECK(census.at(0).dyn_pursuer == 0);
  CHECK(census.at(1).dyn_pursuer == 1);
  CHECK(census.at(1).prior == 0);
}
