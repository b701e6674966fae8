#pragma once

#include "tsk/control.hpp"
#include "tsk/percept.hpp"
#include "tsk/skilldsl.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tsk {

struct SimConfig {
  double table_height = 0.0;   // plane z = table_height
  double dt = 0.01;            // s
  double max_phase_time = 30.0;
  double contact_eps = 0.005;  // rim proximity that counts as contact [m]
};

/// Everything the kinematic world knows: the table plane, the container rim,
/// and the tool's monitored geometry.
struct SimWorld {
  SimConfig cfg;
  ToolFeatures tool;             // body frame
  Vec3 action_centroid = Vec3::Zero();  // body frame, for success judging
  Pose tool_initial_pose;
  ContainerFeatures container;   // world frame
};

enum class Surface { table, rim };

struct ContactEvent {
  double time = 0.0;
  Surface surface = Surface::table;
  Vec3 point = Vec3::Zero();   // on the surface
  Vec3 normal = Vec3::UnitZ();
  std::string monitored;       // which tool point made contact
};

struct Sample {
  double t = 0.0;
  Pose pose;
  std::vector<double> y;       // per-constraint values of the active phase
  double max_violation = 0.0;
  std::string phase;
};

enum class PhaseEnd { velocity, distance, timeout };

std::string to_string(PhaseEnd reason);

struct PhaseRecord {
  std::string name;
  PhaseEnd reason = PhaseEnd::timeout;
  double duration = 0.0;
  double final_violation = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<ContactEvent> contacts;
  std::vector<std::pair<double, std::string>> transitions;  // phase starts
};

struct RunReport {
  TaskKind task = TaskKind::scrape;
  bool success = false;
  std::vector<PhaseRecord> phases;
  double path_length = 0.0;
  int contact_count = 0;
  std::string error;  // nonempty when a stage aborted
};

/// Sequential kinematic integrator with analytic contact against the table
/// plane and the container rim curve. Monitored points: heel, tip and blade.
class Simulator {
 public:
  Simulator(SimWorld world, ControllerConfig ctrl);

  struct StepResult {
    Pose pose;
    std::optional<ContactEvent> event;
  };

  /// Advances one tick. Contact removes the into-surface component of the
  /// commanded linear velocity; an event is emitted when a contact first
  /// becomes active.
  StepResult step(const Pose& pose, const Twist& twist);

  PhaseRecord run_phase(const dsl::BoundPhase& phase, Pose& pose, Trajectory& traj);

  double time() const { return time_; }
  const SimWorld& world() const { return world_; }

 private:
  SimWorld world_;
  ControllerConfig ctrl_;
  double time_ = 0.0;
  std::set<std::pair<int, int>> active_;                 // (monitored idx, surface)
  std::vector<std::pair<std::string, Vec3>> monitored_;  // name, body point
};

/// Runs all phases in order, threading the pose, then applies the task's
/// success predicate. Phase errors abort with the error attached.
std::pair<Trajectory, RunReport> run_task(const SimWorld& world, const ControllerConfig& ctrl,
                                          const dsl::TaskDescription& task,
                                          const std::vector<dsl::BoundPhase>& phases);

/// Geometric success surrogate per task (rim contact + retreat for scrape,
/// depth + level ascent for scoop, table touch + retreat for cut).
bool judge(TaskKind task, const Trajectory& traj, const SimWorld& world);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_events_json(const Trajectory& traj, const std::string& path);
void write_report_json(const RunReport& report, const std::string& path);

}  // namespace tsk
