#include "tsk/control.hpp"

#include "tsk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tsk {

namespace {

Pose perturb_pose(const Pose& pose, int coord, double h) {
  Vec3 v = Vec3::Zero(), w = Vec3::Zero();
  if (coord < 3)
    v(coord) = 1.0;
  else
    w(coord - 3) = 1.0;
  return advance(pose, v, w, h);
}

}  // namespace

std::vector<double> constraint_errors(const dsl::BoundPhase& phase, const Pose& pose) {
  std::vector<double> e(phase.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    const auto& c = phase.spec().soft[i];
    const double y = phase.eval(i, pose);
    e[i] = std::clamp(y, c.lo, c.hi) - y;
  }
  return e;
}

Eigen::MatrixXd constraint_jacobian(const dsl::BoundPhase& phase, const Pose& pose,
                                    double fd_step) {
  const auto n = static_cast<int>(phase.size());
  Eigen::MatrixXd J(n, 6);
  for (int k = 0; k < 6; ++k) {
    const Pose plus = perturb_pose(pose, k, fd_step);
    const Pose minus = perturb_pose(pose, k, -fd_step);
    for (int i = 0; i < n; ++i)
      J(i, k) = (phase.eval(i, plus) - phase.eval(i, minus)) / (2.0 * fd_step);
  }
  return J;
}

Twist tick(const dsl::BoundPhase& phase, const Pose& pose, const ControllerConfig& cfg,
           const HardBounds& hard) {
  const auto n = static_cast<int>(phase.size());
  if (n == 0) return {};

  const std::vector<double> err = constraint_errors(phase, pose);
  Eigen::VectorXd ydot(n), w(n);
  for (int i = 0; i < n; ++i) {
    ydot(i) = std::clamp(cfg.k_p * err[i], -cfg.ydot_max, cfg.ydot_max);
    w(i) = phase.spec().soft[i].weight;
  }

  const Eigen::MatrixXd J = constraint_jacobian(phase, pose, cfg.fd_step);
  const Eigen::MatrixXd Jw = w.asDiagonal() * J;
  Eigen::MatrixXd A = J.transpose() * Jw;
  A += cfg.lambda * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd b = Jw.transpose() * ydot;

  if (cfg.lambda <= 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < 6) throw SolverError("rank-deficient constraint Jacobian with lambda = 0");
  }
  const Eigen::VectorXd xi = A.ldlt().solve(b);

  Twist out;
  out.linear = xi.head<3>();
  out.angular = xi.tail<3>();

  double scale = 1.0;
  const double lin = out.linear.norm();
  const double ang = out.angular.norm();
  if (lin > hard.max_linear_speed) scale = std::min(scale, hard.max_linear_speed / lin);
  if (ang > hard.max_angular_speed) scale = std::min(scale, hard.max_angular_speed / ang);
  out.linear *= scale;
  out.angular *= scale;
  return out;
}

bool stop_check(double elapsed, double speed, double max_violation,
                const dsl::StopCondition& stop) {
  if (elapsed < stop.dwell) return false;
  return speed < stop.velocity_below || max_violation < stop.distance_below;
}

}  // namespace tsk
