#include "tsk/geometry.hpp"

#include "tsk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tsk {

Eigen::Quaterniond quat_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
}

Pose advance(const Pose& pose, const Vec3& v_body, const Vec3& w_body, double dt) {
  Pose out;
  out.translation = pose.translation + dt * (pose.rotation * v_body);
  out.rotation = (pose.rotation * quat_exp(dt * w_body)).normalized();
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("percentile of empty set");
  p = std::clamp(p, 0.0, 100.0);
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace tsk
