#include "tsk/percept.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsk {

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "scrape") return TaskKind::scrape;
  if (name == "scoop") return TaskKind::scoop;
  if (name == "cut") return TaskKind::cut;
  throw Error("unknown task '" + name + "' (expected scrape, scoop or cut)");
}

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::scrape: return "scrape";
    case TaskKind::scoop: return "scoop";
    case TaskKind::cut: return "cut";
  }
  return "?";
}

namespace {

const Superquadric& sq_of(const FittedPart& part) {
  return std::get<Superquadric>(part.sq.model);
}
const Superparaboloid& sp_of(const FittedPart& part) {
  return std::get<Superparaboloid>(part.sp.model);
}

double sq_min_axis(const FittedPart& p) {
  const auto& m = sq_of(p);
  return std::min({m.a1, m.a2, m.a3});
}

double sq_max_axis(const FittedPart& p) {
  const auto& m = sq_of(p);
  return std::max({m.a1, m.a2, m.a3});
}

double sq_median_axis(const FittedPart& p) {
  const auto& m = sq_of(p);
  double a[3] = {m.a1, m.a2, m.a3};
  std::sort(a, a + 3);
  return a[1];
}

double sq_elongation(const FittedPart& p) { return sq_max_axis(p) / sq_min_axis(p); }

double sp_depth_ratio(const FittedPart& p) {
  const auto& m = sp_of(p);
  return m.a3 / std::max(m.a1, m.a2);
}

bool is_concave(const FittedPart& p, const PerceptConfig& cfg) {
  return sp_depth_ratio(p) >= cfg.scoop_min_depth_ratio && p.sp.rms_residual < p.sq.rms_residual;
}

// Direction of the superquadric's smallest semi-axis in world coordinates.
Vec3 sq_min_axis_dir(const FittedPart& p) {
  const auto& m = sq_of(p);
  int idx = 0;
  double best = m.a1;
  if (m.a2 < best) { best = m.a2; idx = 1; }
  if (m.a3 < best) { idx = 2; }
  return m.pose.rotation.toRotationMatrix().col(idx);
}

}  // namespace

int choose_action_part(const std::vector<FittedPart>& parts, TaskKind task,
                       const PerceptConfig& cfg) {
  if (parts.empty()) throw Error("choose_action_part needs at least one fitted part");

  int best = -1;
  double best_key = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    double key = std::numeric_limits<double>::infinity();
    switch (task) {
      case TaskKind::scoop:
        if (is_concave(p, cfg)) key = p.sp.rms_residual;
        break;
      case TaskKind::scrape:
        key = sq_min_axis(p) / sq_median_axis(p);  // flattest wins
        break;
      case TaskKind::cut:
        if (sq_elongation(p) >= cfg.cut_min_elongation) key = sq_min_axis(p);  // thinnest wins
        break;
    }
    if (key < best_key) {
      best_key = key;
      best = static_cast<int>(i);
    }
  }
  if (best < 0)
    throw AffordanceError("no part affords '" + to_string(task) + "'");
  return best;
}

ToolFeatures tool_info(const std::vector<FittedPart>& parts, TaskKind task,
                       const PerceptConfig& cfg) {
  ToolFeatures f;
  f.action_part = choose_action_part(parts, task, cfg);

  // Handle = the most elongated of the remaining parts (the action part
  // itself for single-part tools).
  int handle = f.action_part;
  double best_elong = -1.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (static_cast<int>(i) == f.action_part) continue;
    const double e = sq_elongation(parts[i]);
    if (e > best_elong) {
      best_elong = e;
      handle = static_cast<int>(i);
    }
  }
  f.grasp = parts[handle].cloud.centroid();

  // Tip: the raw cloud point farthest from the grasp, over all parts.
  double best_d = -1.0;
  for (const auto& part : parts) {
    for (const auto& p : part.cloud.points) {
      const double d = (p - f.grasp).norm();
      if (d > best_d) {
        best_d = d;
        f.tip = p;
      }
    }
  }
  if (best_d < 1e-9) throw Error("tool cloud collapses onto the grasp point");
  f.major_axis = (f.tip - f.grasp).normalized();

  // Heel: the action part's proximal extremity along the major axis.
  const auto& action = parts[f.action_part];
  double best_proj = std::numeric_limits<double>::infinity();
  for (const auto& p : action.cloud.points) {
    const double s = p.dot(f.major_axis);
    if (s < best_proj) {
      best_proj = s;
      f.heel = p;
    }
  }

  // Action normal: bowl opening for concave parts, otherwise the flat face
  // normal; either way signed upward in the world.
  f.action_normal =
      is_concave(action, cfg) ? Vec3(sp_of(action).pose.rotation * Vec3::UnitZ()) : sq_min_axis_dir(action);
  if (f.action_normal.z() < 0.0) f.action_normal = -f.action_normal;

  if (task == TaskKind::cut) {
    // Blade point: centroid of the fraction of action-part points most
    // extreme along -action_normal.
    std::vector<std::pair<double, std::size_t>> order(action.cloud.size());
    for (std::size_t i = 0; i < action.cloud.size(); ++i)
      order[i] = {action.cloud.points[i].dot(f.action_normal), i};
    std::sort(order.begin(), order.end());
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(cfg.blade_fraction * action.cloud.size())));
    Vec3 blade = Vec3::Zero();
    for (std::size_t i = 0; i < keep; ++i) blade += action.cloud.points[order[i].second];
    f.blade = blade / static_cast<double>(keep);
  }
  return f;
}

ContainerFeatures container_info(const PointCloud& cloud, const Vec3& query, int n_rim,
                                 int restarts, std::uint64_t seed, const FitConfig& fit_cfg) {
  if (n_rim < 32) throw Error("container_info needs n_rim >= 32");
  const FitResult fit = fit_superparaboloid(cloud, restarts, seed, fit_cfg);
  const Superparaboloid refined = refine_rim(std::get<Superparaboloid>(fit.model), cloud);

  ContainerFeatures out;
  out.model = refined;
  out.fit_rms = fit.rms_residual;
  out.rim_samples = rim_superellipse(refined, n_rim);
  out.top_centre = refined.pose.apply(Vec3(0.0, 0.0, refined.a3));
  out.rim_normal = refined.pose.rotation * Vec3::UnitZ();

  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : out.rim_samples) {
    const double d = (s - query).norm();
    if (d < best) {
      best = d;
      out.edge = s;
    }
  }
  return out;
}

std::vector<FittedPart> fit_parts(const std::vector<PointCloud>& parts, int restarts,
                                  std::uint64_t seed, const FitConfig& fit_cfg) {
  std::vector<FittedPart> out;
  out.reserve(parts.size());
  for (const auto& cloud : parts) {
    FittedPart fp;
    fp.cloud = cloud;
    fp.sq = fit_superquadric(cloud, restarts, seed, fit_cfg);
    fp.sp = fit_superparaboloid(cloud, restarts, seed, fit_cfg);
    out.push_back(std::move(fp));
  }
  return out;
}

}  // namespace tsk
