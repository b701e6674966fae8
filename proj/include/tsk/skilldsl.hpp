#pragma once

#include "tsk/errors.hpp"
#include "tsk/geometry.hpp"

#include <map>
#include <string>
#include <vector>

namespace tsk::dsl {

// Scalar expression AST over named scene features.
//
// Grammar (one statement per line, '#' comments):
//   task_file  = "task" IDENT { "phase" IDENT } ;
//   phase_file = "phase" IDENT { soft | hard | stop } ;
//   soft  = "soft" sexpr "in" "[" NUM "," NUM "]" [ "weight" NUM ] ;
//   hard  = "hard" ("max-linear-speed" | "max-angular-speed") NUM ;
//   stop  = "stop" ("velocity-below" | "distance-below" | "dwell") NUM ;
//   sexpr = "dist(" pt "," pt ")" | "angle(" dir "," dir ")"
//         | "height(" pt ")" | "along(" pt "," dir ")" ;
//   pt    = FEATURE | "offset(" pt "," dir "," NUM ")" | "midpoint(" pt "," pt ")" ;
//   dir   = FEATURE | "toward(" pt "," pt ")" | "horizontal_toward(" pt "," pt ")" ;
//   FEATURE = IDENT "." IDENT ; NUM = decimal literal.

enum class ExprKind {
  feature,
  offset,
  midpoint,
  toward,
  horizontal_toward,
  dist,
  angle,
  height,
  along,
};

struct Expr {
  ExprKind kind = ExprKind::feature;
  std::string feature;      // kind == feature
  double scalar = 0.0;      // kind == offset: signed distance along the direction
  std::vector<Expr> args;

  bool operator==(const Expr&) const = default;
};

struct Constraint {
  Expr expr;
  double lo = 0.0;
  double hi = 0.0;
  double weight = 1.0;

  bool operator==(const Constraint&) const = default;
};

struct StopCondition {
  double velocity_below = 0.0;
  double distance_below = 0.0;
  double dwell = 0.2;

  bool operator==(const StopCondition&) const = default;
};

struct PhaseSpec {
  std::string name;
  std::vector<Constraint> soft;
  double max_linear_speed = 0.1;    // m/s
  double max_angular_speed = 0.5;   // rad/s
  StopCondition stop;

  bool operator==(const PhaseSpec&) const = default;
};

struct TaskDescription {
  std::string name;
  std::vector<std::string> phases;

  bool operator==(const TaskDescription&) const = default;
};

TaskDescription parse_task(const std::string& text);
PhaseSpec parse_phase(const std::string& text);

/// Canonical text with all defaults written out; parse(serialize(x)) == x.
std::string serialize(const TaskDescription& task);
std::string serialize(const PhaseSpec& phase);

/// Feature environment for binding. tool.* entries are stored in the tool's
/// body frame and re-expressed through the current tool pose at every
/// evaluation; target.* and world.* entries are world-frame constants.
struct Scene {
  std::map<std::string, Vec3> tool_points;
  std::map<std::string, Vec3> tool_dirs;
  std::map<std::string, Vec3> const_points;
  std::map<std::string, Vec3> const_dirs;
  std::map<std::string, double> scalars;

  Scene() {
    const_dirs["world.up"] = Vec3(0.0, 0.0, 1.0);
    scalars["world.table_height"] = 0.0;
  }
};

struct ResolvedFeature {
  bool tool_frame = false;
  bool is_direction = false;
  Vec3 value = Vec3::Zero();
};

class BoundPhase {
 public:
  BoundPhase() = default;
  BoundPhase(PhaseSpec spec, std::map<std::string, ResolvedFeature> features)
      : spec_(std::move(spec)), features_(std::move(features)) {}

  const PhaseSpec& spec() const { return spec_; }
  std::size_t size() const { return spec_.soft.size(); }

  /// Value of constraint i's expression under the given tool pose.
  double eval(std::size_t i, const Pose& tool_pose) const;

 private:
  PhaseSpec spec_;
  std::map<std::string, ResolvedFeature> features_;
};

/// Resolves every feature reference in the phase against the scene; throws
/// BindError listing all missing (or wrongly-sorted) names.
BoundPhase bind(const PhaseSpec& phase, const Scene& scene);

/// One-shot evaluation for tests and probes; resolves against the scene on
/// the fly.
double eval_expr(const Expr& expr, const Scene& scene, const Pose& tool_pose);

}  // namespace tsk::dsl
