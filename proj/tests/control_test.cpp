#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tsk/control.hpp"

#include <cmath>

using namespace tsk;
using namespace tsk::dsl;

namespace {

Scene point_scene(const Vec3& goal) {
  Scene s;
  s.tool_points["tool.tip"] = Vec3::Zero();
  s.tool_points["tool.heel"] = Vec3(-0.05, 0, 0);
  s.tool_dirs["tool.major_axis"] = Vec3(1, 0, 0);
  s.const_points["target.goal"] = goal;
  return s;
}

BoundPhase dist_phase(const Vec3& goal, double lo = 0.0, double hi = 0.0, double weight = 1.0) {
  PhaseSpec spec = parse_phase("phase p\nsoft dist(tool.tip, target.goal) in [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "] weight " +
                               std::to_string(weight) + "\n");
  return bind(spec, point_scene(goal));
}

}  // namespace

TEST_CASE("constraint error is the band violation") {
  Scene s;
  s.const_points["target.a"] = Vec3(0, 0, 0);
  s.const_points["target.b"] = Vec3(0.5, 0, 0);

  const auto at = [&](double lo, double hi) {
    PhaseSpec spec = parse_phase("phase p\nsoft dist(target.a, target.b) in [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]\n");
    return constraint_errors(bind(spec, s), Pose{})[0];
  };
  CHECK(at(0.0, 0.01) == doctest::Approx(-0.49));
  CHECK(at(0.2, 0.8) == 0.0);
  CHECK(at(0.7, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("jacobian rows") {
  SUBCASE("height of a point at the body origin") {
    Scene s;
    s.tool_points["tool.tip"] = Vec3::Zero();
    const BoundPhase phase = bind(parse_phase("phase p\nsoft height(tool.tip) in [0, 0]\n"), s);
    const Eigen::MatrixXd J = constraint_jacobian(phase, Pose{}, 1e-6);
    REQUIRE(J.rows() == 1);
    CHECK(J(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(J(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(J(0, 2) == doctest::Approx(1.0));
    CHECK(std::abs(J(0, 3)) < 1e-6);
    CHECK(std::abs(J(0, 4)) < 1e-6);
    CHECK(std::abs(J(0, 5)) < 1e-6);
  }

  SUBCASE("distance gradient matches the unit offset vector") {
    const Vec3 goal(0.3, -0.2, 0.4);
    const BoundPhase phase = dist_phase(goal);
    Pose pose;  // tip at origin
    const Eigen::MatrixXd J = constraint_jacobian(phase, pose, 1e-6);
    const Vec3 expected = (Vec3::Zero() - goal).normalized();  // d dist / d tip
    for (int k = 0; k < 3; ++k) CHECK(J(0, k) == doctest::Approx(expected(k)).epsilon(1e-5));
  }

  SUBCASE("step halving changes smooth entries very little") {
    const Vec3 goal(0.2, 0.1, -0.3);
    const BoundPhase phase = dist_phase(goal);
    Pose pose;
    pose.translation = Vec3(0.01, -0.02, 0.03);
    const Eigen::MatrixXd a = constraint_jacobian(phase, pose, 1e-6);
    const Eigen::MatrixXd b = constraint_jacobian(phase, pose, 2e-6);
    CHECK((a - b).norm() <= 1e-6 * (a.norm() + 1.0));
  }
}

TEST_CASE("tick basics") {
  const ControllerConfig cfg;
  const HardBounds hard;

  SUBCASE("zero constraints give a zero twist") {
    Scene s;
    PhaseSpec spec;
    spec.name = "empty";
    const BoundPhase phase(spec, {});
    const Twist tw = tick(phase, Pose{}, cfg, hard);
    CHECK(tw.linear.norm() == 0.0);
    CHECK(tw.angular.norm() == 0.0);
  }

  SUBCASE("single constraint matches the rank-1 closed form") {
    const Vec3 goal(0.49, 0, 0);
    const double weight = 2.0;
    const BoundPhase phase = dist_phase(goal, 0.0, 0.0, weight);
    const Pose pose;  // tip at origin, dist = 0.49

    const Twist tw = tick(phase, pose, cfg, HardBounds{10.0, 10.0});

    // Hand-computed: xi = (w J^T J + lambda I)^{-1} w J^T ydot with
    // J = [-goal_hat, 0], ydot = clamp(kp * 0.49, 0.25) = 0.25... sign:
    // e = clamp(y) - y = -0.49, ydot = -0.25 (decrease the distance).
    const Eigen::Matrix<double, 1, 6> J =
        (Eigen::Matrix<double, 1, 6>() << -1, 0, 0, 0, 0, 0).finished();
    const double ydot = -0.25;
    const Eigen::Matrix<double, 6, 6> A =
        weight * J.transpose() * J + cfg.lambda * Eigen::Matrix<double, 6, 6>::Identity();
    const Eigen::Matrix<double, 6, 1> xi = A.ldlt().solve(weight * J.transpose() * ydot);
    CHECK(tw.linear.x() == doctest::Approx(xi(0)).epsilon(1e-9));

    // and it points from the tip toward the goal
    CHECK(tw.linear.normalized().dot((goal - Vec3::Zero()).normalized()) ==
          doctest::Approx(1.0));
  }

  SUBCASE("symmetric pulls cancel") {
    Scene s;
    s.tool_points["tool.tip"] = Vec3::Zero();
    s.const_points["target.left"] = Vec3(-0.3, 0, 0);
    s.const_points["target.right"] = Vec3(0.3, 0, 0);
    PhaseSpec spec = parse_phase(
        "phase p\n"
        "soft dist(tool.tip, target.left) in [0, 0]\n"
        "soft dist(tool.tip, target.right) in [0, 0]\n");
    const Twist tw = tick(bind(spec, s), Pose{}, cfg, hard);
    CHECK(std::abs(tw.linear.x()) <= 1e-12);
  }

  SUBCASE("inside-band fixed point returns the exact zero twist") {
    const BoundPhase phase = dist_phase(Vec3(0.3, 0, 0), 0.0, 1.0);
    const Twist tw = tick(phase, Pose{}, cfg, hard);
    CHECK(tw.linear == Vec3::Zero());
    CHECK(tw.angular == Vec3::Zero());
  }
}

TEST_CASE("hard bounds scale uniformly and are never exceeded") {
  Rng rng(321);
  const ControllerConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const Vec3 goal(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (goal.norm() < 1e-3) continue;
    const BoundPhase phase = dist_phase(goal);
    Pose pose;
    pose.translation = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    pose.rotation = quat_exp(rng.unit_vector() * rng.uniform(0.0, 1.5));
    const HardBounds hard{rng.uniform(0.01, 0.2), rng.uniform(0.05, 1.0)};
    const Twist tw = tick(phase, pose, cfg, hard);
    CHECK(tw.linear.norm() <= hard.max_linear_speed + 1e-12);
    CHECK(tw.angular.norm() <= hard.max_angular_speed + 1e-12);
  }
}

TEST_CASE("least-squares optimality on random instances") {
  Rng rng(654);
  for (int inst = 0; inst < 20; ++inst) {
    Scene s;
    s.tool_points["tool.tip"] = Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0);
    s.tool_points["tool.heel"] = Vec3(rng.uniform(-0.1, 0.1), 0, rng.uniform(-0.1, 0.1));
    s.const_points["target.a"] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    s.const_points["target.b"] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    PhaseSpec spec = parse_phase(
        "phase p\n"
        "soft dist(tool.tip, target.a) in [0, 0] weight 1.5\n"
        "soft dist(tool.heel, target.b) in [0, 0] weight 0.7\n"
        "soft height(tool.tip) in [0, 0.05] weight 2.0\n");
    const BoundPhase phase = bind(spec, s);
    const Pose pose;
    const ControllerConfig cfg;

    const Twist tw = tick(phase, pose, cfg, HardBounds{100.0, 100.0});
    Eigen::VectorXd xi(6);
    xi << tw.linear, tw.angular;

    const Eigen::MatrixXd J = constraint_jacobian(phase, pose, cfg.fd_step);
    const auto err = constraint_errors(phase, pose);
    Eigen::VectorXd ydot(J.rows()), w(J.rows());
    for (int i = 0; i < J.rows(); ++i) {
      ydot(i) = std::clamp(cfg.k_p * err[i], -cfg.ydot_max, cfg.ydot_max);
      w(i) = phase.spec().soft[i].weight;
    }
    const auto objective = [&](const Eigen::VectorXd& v) {
      const Eigen::VectorXd r = J * v - ydot;
      return r.dot(w.asDiagonal() * r) + cfg.lambda * v.squaredNorm();
    };
    const double at_solution = objective(xi);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd d(6);
      for (int j = 0; j < 6; ++j) d(j) = rng.normal();
      d *= 1e-4 / d.norm();
      CHECK(objective(xi + d) >= at_solution - 1e-15);
    }
  }
}

TEST_CASE("convergence of a single point constraint") {
  // From half a meter away, defaults must reach a violation below 1e-3
  // within 10 simulated seconds at dt = 0.01.
  const Vec3 goal(0.5, 0, 0);
  const BoundPhase phase = dist_phase(goal);
  const ControllerConfig cfg;
  const HardBounds hard;  // defaults 0.1 m/s, 0.5 rad/s
  Pose pose;
  const double dt = 0.01;
  double prev_violation = 1e9;
  bool monotone = true;
  double reached_at = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const Twist tw = tick(phase, pose, cfg, hard);
    pose = advance(pose, tw.linear, tw.angular, dt);
    const auto err = constraint_errors(phase, pose);
    const double violation = std::abs(err[0]);
    if (k > 0 && violation > prev_violation + 1e-12) monotone = false;
    prev_violation = violation;
    if (violation < 1e-3) {
      reached_at = (k + 1) * dt;
      break;
    }
  }
  CHECK(monotone);
  REQUIRE(reached_at > 0.0);
  CHECK(reached_at <= 10.0);
}

TEST_CASE("lambda zero with a rank-deficient jacobian is a solver error") {
  const BoundPhase phase = dist_phase(Vec3(0.5, 0, 0));
  ControllerConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(tick(phase, Pose{}, cfg, HardBounds{}), SolverError);
}

TEST_CASE("stop_check") {
  StopCondition stop;
  stop.velocity_below = 0.005;
  stop.distance_below = 0.01;
  stop.dwell = 0.2;
  CHECK_FALSE(stop_check(0.1, 0.0, 0.0, stop));          // dwell gate
  CHECK(stop_check(0.3, 0.001, 5.0, stop));              // contact: velocity ~ 0
  CHECK(stop_check(0.3, 5.0, 0.005, stop));              // goal: violation ~ 0
  CHECK_FALSE(stop_check(0.3, 0.1, 0.5, stop));          // neither
  StopCondition disabled;                                // zero thresholds never fire
  disabled.dwell = 0.0;
  CHECK_FALSE(stop_check(1.0, 0.0, 0.0, disabled));
}
