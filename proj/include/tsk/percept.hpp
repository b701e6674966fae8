#pragma once

#include "tsk/cloud.hpp"
#include "tsk/sqmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsk {

enum class TaskKind { scrape, scoop, cut };

TaskKind task_kind_from_name(const std::string& name);
std::string to_string(TaskKind task);

struct PerceptConfig {
  double scoop_min_depth_ratio = 0.2;  // a3 / max(a1, a2) for a usable bowl
  double cut_min_elongation = 4.0;     // max axis / min axis for a usable blade
  double blade_fraction = 0.05;        // share of lowest points averaged into the blade point
};

/// One segmented tool part with both model fits; the task rules pick
/// whichever fit they need.
struct FittedPart {
  PointCloud cloud;
  FitResult sq;
  FitResult sp;
};

/// Named tool geometry, all in the tool's body frame (the frame the cloud
/// was scanned in).
struct ToolFeatures {
  Vec3 grasp = Vec3::Zero();
  Vec3 tip = Vec3::Zero();
  Vec3 heel = Vec3::Zero();
  std::optional<Vec3> blade;        // cutting tasks only
  Vec3 major_axis = Vec3::UnitX();  // unit, grasp -> tip
  Vec3 action_normal = Vec3::UnitZ();
  int action_part = -1;
};

struct ContainerFeatures {
  Vec3 top_centre = Vec3::Zero();  // world image of local (0, 0, a3)
  Vec3 edge = Vec3::Zero();        // rim sample nearest the query point
  Vec3 rim_normal = Vec3::UnitZ();
  std::vector<Vec3> rim_samples;
  Superparaboloid model;           // rim-refined
  double fit_rms = 0.0;            // residual of the underlying fit
};

/// Picks the part to use as end effector for the task, or throws
/// AffordanceError when no part qualifies. Ties break to the lower index.
int choose_action_part(const std::vector<FittedPart>& parts, TaskKind task,
                       const PerceptConfig& cfg = {});

/// Full tool query: grasp/tip/heel (+ blade for cutting), the major axis and
/// the action normal. tip is always a raw cloud point.
ToolFeatures tool_info(const std::vector<FittedPart>& parts, TaskKind task,
                       const PerceptConfig& cfg = {});

/// Full container query: fits a superparaboloid, extends the rim to the
/// cloud's upper extent, samples the rim superellipse and picks the sample
/// nearest the query point.
ContainerFeatures container_info(const PointCloud& cloud, const Vec3& query, int n_rim,
                                 int restarts, std::uint64_t seed, const FitConfig& fit_cfg = {});

/// Fits both shape models to every part.
std::vector<FittedPart> fit_parts(const std::vector<PointCloud>& parts, int restarts,
                                  std::uint64_t seed, const FitConfig& fit_cfg = {});

}  // namespace tsk
