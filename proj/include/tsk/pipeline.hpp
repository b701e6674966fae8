#pragma once

#include "tsk/percept.hpp"
#include "tsk/sim.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace tsk {

/// One run of the full pipeline. Every tunable constant of every stage lives
/// here with its documented default.
struct RunConfig {
  std::string tool_cloud;
  std::string container_cloud;
  std::string task_file;
  std::string phase_dir;
  std::string out_dir = "out";

  std::uint64_t seed = 1;
  int restarts = 6;
  int n_rim = 64;

  FitConfig fit;
  SegmentationConfig segmentation;
  PerceptConfig percept;
  ControllerConfig controller;
  SimConfig sim;
  Pose tool_initial_pose;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir);

nlohmann::json fit_to_json(const FitResult& fit);

/// Perception products of one scene, before any motion.
struct SceneInfo {
  std::vector<FittedPart> parts;
  ToolFeatures tool;
  ContainerFeatures container;
  TaskKind task = TaskKind::scrape;
  dsl::TaskDescription description;
  std::vector<dsl::PhaseSpec> phase_specs;
};

/// Runs segmentation, fitting and both vision queries; parses the task and
/// phase files. The container edge query point is the tool tip's initial
/// world position.
SceneInfo analyze_scene(const RunConfig& cfg);

nlohmann::json feature_report(const SceneInfo& scene);

struct PipelineResult {
  Trajectory trajectory;
  RunReport report;
};

/// features -> bind -> run_task -> export (trajectory.csv, events.json,
/// report.json under cfg.out_dir).
PipelineResult run_pipeline(const RunConfig& cfg);

struct MatrixEntry {
  std::string id;
  std::string cloud;
};

struct MatrixConfig {
  std::vector<MatrixEntry> tools;
  std::vector<MatrixEntry> containers;
  RunConfig base;      // shared paths (task/phases) and knobs
  int parallel = 1;
};

MatrixConfig load_matrix_config(const std::string& path);

struct MatrixCell {
  std::string tool;
  std::string container;
  bool success = false;
  std::string error;
};

struct MatrixResult {
  std::vector<MatrixCell> cells;  // tool-major order
  int successes = 0;
};

/// Runs the tool x container product; individual failures are recorded,
/// never fatal. Writes aggregate JSON and a text table under out_dir.
MatrixResult run_matrix(const MatrixConfig& cfg);

}  // namespace tsk
