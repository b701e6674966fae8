#include "tsk/lm.hpp"

#include <cmath>
#include <limits>

namespace tsk::lm {

namespace {

double cost_of(const Eigen::VectorXd& r) { return r.squaredNorm(); }

}  // namespace

Result minimize(const ResidualFn& residuals, int n_residuals, Eigen::VectorXd x0,
                const Options& opts, const ProjectFn& project) {
  const auto n_params = static_cast<int>(x0.size());
  if (project) project(x0);

  Result out;
  out.x = x0;
  Eigen::VectorXd r(n_residuals);
  residuals(out.x, r);
  out.cost = cost_of(r);
  out.accepted_costs.push_back(out.cost);
  if (!std::isfinite(out.cost)) return out;

  Eigen::MatrixXd J(n_residuals, n_params);
  Eigen::VectorXd r_plus(n_residuals), r_minus(n_residuals), r_trial(n_residuals);
  double lambda = opts.lambda0;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter + 1;

    for (int j = 0; j < n_params; ++j) {
      Eigen::VectorXd xp = out.x, xm = out.x;
      xp(j) += opts.fd_step;
      xm(j) -= opts.fd_step;
      residuals(xp, r_plus);
      residuals(xm, r_minus);
      J.col(j) = (r_plus - r_minus) / (2.0 * opts.fd_step);
    }

    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;

    bool accepted = false;
    while (lambda <= opts.lambda_max) {
      Eigen::MatrixXd A = JtJ;
      for (int j = 0; j < n_params; ++j) A(j, j) += lambda * std::max(JtJ(j, j), 1e-12);
      const Eigen::VectorXd delta = A.ldlt().solve(-g);
      Eigen::VectorXd x_trial = out.x + delta;
      if (project) project(x_trial);
      residuals(x_trial, r_trial);
      const double c_trial = cost_of(r_trial);
      if (std::isfinite(c_trial) && c_trial < out.cost) {
        const double rel = (out.cost - c_trial) / std::max(out.cost, 1e-300);
        out.x = x_trial;
        r = r_trial;
        out.cost = c_trial;
        out.accepted_costs.push_back(c_trial);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (rel < opts.rel_tol) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || out.converged) break;  // stalled damping also terminates
  }
  return out;
}

}  // namespace tsk::lm
