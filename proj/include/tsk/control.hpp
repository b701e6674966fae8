#pragma once

#include "tsk/geometry.hpp"
#include "tsk/skilldsl.hpp"

#include <Eigen/Dense>

#include <vector>

namespace tsk {

/// Commanded body-frame velocity of the tool.
struct Twist {
  Vec3 linear = Vec3::Zero();    // m/s
  Vec3 angular = Vec3::Zero();   // rad/s
};

struct ControllerConfig {
  double k_p = 2.0;        // 1/s proportional gain on band violations
  double ydot_max = 0.25;  // per-constraint desired-rate clamp
  double lambda = 1e-6;    // twist regularization
  double fd_step = 1e-6;   // Jacobian finite-difference step
};

struct HardBounds {
  double max_linear_speed = 0.1;
  double max_angular_speed = 0.5;
};

/// Band violations: e_i = clamp(y_i, lo, hi) - y_i (zero inside the band).
std::vector<double> constraint_errors(const dsl::BoundPhase& phase, const Pose& pose);

/// Central finite difference of every constraint value with respect to the
/// six body-twist coordinates (translation, then rotation).
Eigen::MatrixXd constraint_jacobian(const dsl::BoundPhase& phase, const Pose& pose,
                                    double fd_step);

/// One controller step: regularized weighted least squares on the desired
/// constraint rates, then uniform scaling into the hard speed bounds.
Twist tick(const dsl::BoundPhase& phase, const Pose& pose, const ControllerConfig& cfg,
           const HardBounds& hard);

/// Disjunctive stop test, armed only after the dwell time.
bool stop_check(double elapsed, double speed, double max_violation,
                const dsl::StopCondition& stop);

}  // namespace tsk
