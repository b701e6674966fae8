#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace tsk::lm {

struct Options {
  double lambda0 = 1e-3;
  int max_iterations = 200;
  double rel_tol = 1e-9;       // stop when the relative cost change drops below this
  double fd_step = 1e-6;       // central-difference step for the Jacobian
  double lambda_max = 1e12;
};

struct Result {
  Eigen::VectorXd x;
  double cost = 0.0;                  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::vector<double> accepted_costs;  // starts with the initial cost
};

using ResidualFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r)>;
using ProjectFn = std::function<void(Eigen::VectorXd& x)>;

/// Damped Gauss-Newton with the classic Levenberg-Marquardt schedule:
/// lambda x10 on reject, /10 on accept, diagonal damping. The Jacobian is a
/// central finite difference of the residual function. `project` clamps trial
/// iterates into the feasible box before evaluation.
Result minimize(const ResidualFn& residuals, int n_residuals, Eigen::VectorXd x0,
                const Options& opts = {}, const ProjectFn& project = {});

}  // namespace tsk::lm
