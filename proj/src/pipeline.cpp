#include "tsk/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace tsk {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / path).string();
}

Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  if (j.contains("quaternion")) {
    const auto q = j.at("quaternion");
    p.rotation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                    q.at(2).get<double>(), q.at(3).get<double>())
                     .normalized();
  }
  if (j.contains("translation")) {
    const auto t = j.at("translation");
    p.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
  }
  return p;
}

nlohmann::json pose_to_json(const Pose& p) {
  return {{"quaternion", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
          {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  RunConfig cfg;
  maybe(j, "tool_cloud", cfg.tool_cloud);
  maybe(j, "container_cloud", cfg.container_cloud);
  maybe(j, "task_file", cfg.task_file);
  maybe(j, "phase_dir", cfg.phase_dir);
  maybe(j, "out_dir", cfg.out_dir);
  maybe(j, "seed", cfg.seed);
  maybe(j, "restarts", cfg.restarts);
  maybe(j, "n_rim", cfg.n_rim);
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    maybe(f, "lambda0", cfg.fit.lambda0);
    maybe(f, "max_iterations", cfg.fit.max_iterations);
    maybe(f, "rel_tol", cfg.fit.rel_tol);
  }
  if (j.contains("segmentation")) {
    const auto& s = j.at("segmentation");
    maybe(s, "bins", cfg.segmentation.bins);
    maybe(s, "jump_factor", cfg.segmentation.jump_factor);
    maybe(s, "min_part_points", cfg.segmentation.min_part_points);
  }
  if (j.contains("percept")) {
    const auto& p = j.at("percept");
    maybe(p, "scoop_min_depth_ratio", cfg.percept.scoop_min_depth_ratio);
    maybe(p, "cut_min_elongation", cfg.percept.cut_min_elongation);
    maybe(p, "blade_fraction", cfg.percept.blade_fraction);
  }
  if (j.contains("controller")) {
    const auto& c = j.at("controller");
    maybe(c, "k_p", cfg.controller.k_p);
    maybe(c, "ydot_max", cfg.controller.ydot_max);
    maybe(c, "lambda", cfg.controller.lambda);
    maybe(c, "fd_step", cfg.controller.fd_step);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    maybe(s, "table_height", cfg.sim.table_height);
    maybe(s, "dt", cfg.sim.dt);
    maybe(s, "max_phase_time", cfg.sim.max_phase_time);
    maybe(s, "contact_eps", cfg.sim.contact_eps);
  }
  if (j.contains("tool_initial_pose")) cfg.tool_initial_pose = pose_from_json(j.at("tool_initial_pose"));

  cfg.tool_cloud = resolve(base_dir, cfg.tool_cloud);
  cfg.container_cloud = resolve(base_dir, cfg.container_cloud);
  cfg.task_file = resolve(base_dir, cfg.task_file);
  cfg.phase_dir = resolve(base_dir, cfg.phase_dir);
  cfg.out_dir = resolve(base_dir, cfg.out_dir);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config '" + path + "': " + e.what());
  }
  return run_config_from_json(j, fs::path(path).parent_path().string());
}

nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json j;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        j["kind"] = std::is_same_v<M, Superquadric> ? "superquadric" : "superparaboloid";
        j["a1"] = m.a1;
        j["a2"] = m.a2;
        j["a3"] = m.a3;
        j["eps1"] = m.eps1;
        j["eps2"] = m.eps2;
        j["pose"] = pose_to_json(m.pose);
      },
      fit.model);
  j["rms_residual"] = fit.rms_residual;
  return j;
}

SceneInfo analyze_scene(const RunConfig& cfg) {
  SceneInfo scene;

  scene.description = dsl::parse_task(read_file(cfg.task_file));
  scene.task = task_kind_from_name(scene.description.name);
  for (const auto& name : scene.description.phases) {
    const std::string path = (fs::path(cfg.phase_dir) / (name + ".phase")).string();
    scene.phase_specs.push_back(dsl::parse_phase(read_file(path)));
  }

  const PointCloud tool_cloud = load_cloud(cfg.tool_cloud);
  const auto parts = segment_tool(tool_cloud, cfg.segmentation);
  scene.parts = fit_parts(parts, cfg.restarts, cfg.seed, cfg.fit);
  scene.tool = tool_info(scene.parts, scene.task, cfg.percept);

  const PointCloud container_cloud = load_cloud(cfg.container_cloud);
  const Vec3 query = cfg.tool_initial_pose.apply(scene.tool.tip);
  scene.container =
      container_info(container_cloud, query, cfg.n_rim, cfg.restarts, cfg.seed, cfg.fit);
  return scene;
}

nlohmann::json feature_report(const SceneInfo& scene) {
  nlohmann::json tool{{"grasp", vec_json(scene.tool.grasp)},
                      {"tip", vec_json(scene.tool.tip)},
                      {"heel", vec_json(scene.tool.heel)},
                      {"major_axis", vec_json(scene.tool.major_axis)},
                      {"action_normal", vec_json(scene.tool.action_normal)},
                      {"action_part", scene.tool.action_part}};
  if (scene.tool.blade) tool["blade"] = vec_json(*scene.tool.blade);

  FitResult container_fit;
  container_fit.model = scene.container.model;
  container_fit.rms_residual = scene.container.fit_rms;
  const nlohmann::json model = fit_to_json(container_fit);

  nlohmann::json container{{"top_centre", vec_json(scene.container.top_centre)},
                           {"edge", vec_json(scene.container.edge)},
                           {"rim_normal", vec_json(scene.container.rim_normal)},
                           {"model", model}};
  return {{"tool", tool}, {"container", container}};
}

namespace {

dsl::Scene make_dsl_scene(const SceneInfo& scene, const SimConfig& sim) {
  dsl::Scene s;
  s.tool_points["tool.grasp"] = scene.tool.grasp;
  s.tool_points["tool.tip"] = scene.tool.tip;
  s.tool_points["tool.heel"] = scene.tool.heel;
  if (scene.tool.blade) s.tool_points["tool.blade"] = *scene.tool.blade;
  s.tool_dirs["tool.major_axis"] = scene.tool.major_axis;
  s.tool_dirs["tool.action_normal"] = scene.tool.action_normal;
  s.const_points["target.edge"] = scene.container.edge;
  s.const_points["target.top_centre"] = scene.container.top_centre;
  s.const_dirs["target.rim_normal"] = scene.container.rim_normal;
  s.scalars["world.table_height"] = sim.table_height;
  return s;
}

Vec3 action_centroid_of(const SceneInfo& scene) {
  return scene.parts[static_cast<std::size_t>(scene.tool.action_part)].cloud.centroid();
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
  const SceneInfo scene = analyze_scene(cfg);

  const dsl::Scene env = make_dsl_scene(scene, cfg.sim);
  std::vector<dsl::BoundPhase> bound;
  bound.reserve(scene.phase_specs.size());
  for (const auto& spec : scene.phase_specs) bound.push_back(dsl::bind(spec, env));

  SimWorld world;
  world.cfg = cfg.sim;
  world.tool = scene.tool;
  world.action_centroid = action_centroid_of(scene);
  world.tool_initial_pose = cfg.tool_initial_pose;
  world.container = scene.container;

  PipelineResult out;
  std::tie(out.trajectory, out.report) = run_task(world, cfg.controller, scene.description, bound);

  fs::create_directories(cfg.out_dir);
  write_trajectory_csv(out.trajectory, (fs::path(cfg.out_dir) / "trajectory.csv").string());
  write_events_json(out.trajectory, (fs::path(cfg.out_dir) / "events.json").string());
  write_report_json(out.report, (fs::path(cfg.out_dir) / "report.json").string());
  {
    std::ofstream f((fs::path(cfg.out_dir) / "features.json").string());
    f << feature_report(scene).dump(2) << "\n";
  }
  return out;
}

MatrixConfig load_matrix_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("matrix config '" + path + "': " + e.what());
  }
  const std::string base_dir = fs::path(path).parent_path().string();

  MatrixConfig cfg;
  cfg.base = run_config_from_json(j, base_dir);
  maybe(j, "parallel", cfg.parallel);
  if (!j.contains("tools") || !j.contains("containers"))
    throw IoError("matrix config needs 'tools' and 'containers' lists");
  for (const auto& t : j.at("tools"))
    cfg.tools.push_back({t.at("id").get<std::string>(),
                         resolve(base_dir, t.at("cloud").get<std::string>())});
  for (const auto& c : j.at("containers"))
    cfg.containers.push_back({c.at("id").get<std::string>(),
                              resolve(base_dir, c.at("cloud").get<std::string>())});
  if (cfg.tools.empty() || cfg.containers.empty())
    throw IoError("matrix config: empty tool or container list");
  return cfg;
}

MatrixResult run_matrix(const MatrixConfig& cfg) {
  const std::size_t n_cells = cfg.tools.size() * cfg.containers.size();
  MatrixResult result;
  result.cells.resize(n_cells);

  const auto run_cell = [&](std::size_t idx) {
    const std::size_t ti = idx / cfg.containers.size();
    const std::size_t ci = idx % cfg.containers.size();
    MatrixCell cell;
    cell.tool = cfg.tools[ti].id;
    cell.container = cfg.containers[ci].id;
    RunConfig rc = cfg.base;
    rc.tool_cloud = cfg.tools[ti].cloud;
    rc.container_cloud = cfg.containers[ci].cloud;
    rc.out_dir =
        (fs::path(cfg.base.out_dir) / "cells" / (cell.tool + "__" + cell.container)).string();
    try {
      cell.success = run_pipeline(rc).report.success;
    } catch (const std::exception& e) {
      cell.success = false;
      cell.error = e.what();
    }
    result.cells[idx] = std::move(cell);
  };

  const int workers = std::max(1, cfg.parallel);
  if (workers == 1) {
    for (std::size_t i = 0; i < n_cells; ++i) run_cell(i);
  } else {
    std::vector<std::future<void>> pending;
    for (std::size_t i = 0; i < n_cells; ++i) {
      pending.push_back(std::async(std::launch::async, run_cell, i));
      if (static_cast<int>(pending.size()) >= workers) {
        for (auto& f : pending) f.get();
        pending.clear();
      }
    }
    for (auto& f : pending) f.get();
  }

  for (const auto& c : result.cells) result.successes += c.success ? 1 : 0;

  // Aggregate JSON plus a tools x containers text table.
  fs::create_directories(cfg.base.out_dir);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells)
    cells.push_back({{"tool", c.tool},
                     {"container", c.container},
                     {"success", c.success},
                     {"error", c.error}});
  nlohmann::json agg{{"cells", cells},
                     {"successes", result.successes},
                     {"total", static_cast<int>(n_cells)}};
  {
    std::ofstream f((fs::path(cfg.base.out_dir) / "matrix_report.json").string());
    f << agg.dump(2) << "\n";
  }
  {
    std::ofstream f((fs::path(cfg.base.out_dir) / "matrix_table.txt").string());
    std::size_t wide = 4;
    for (const auto& t : cfg.tools) wide = std::max(wide, t.id.size());
    f << std::string(wide, ' ') << " |";
    for (const auto& c : cfg.containers) f << " " << c.id;
    f << "\n";
    for (std::size_t ti = 0; ti < cfg.tools.size(); ++ti) {
      f << cfg.tools[ti].id << std::string(wide - cfg.tools[ti].id.size(), ' ') << " |";
      for (std::size_t ci = 0; ci < cfg.containers.size(); ++ci) {
        const auto& cell = result.cells[ti * cfg.containers.size() + ci];
        const std::string mark = cell.success ? "pass" : "FAIL";
        f << " " << mark << std::string(cfg.containers[ci].id.size() > 4
                                            ? cfg.containers[ci].id.size() - 4
                                            : 0,
                                        ' ');
      }
      f << "\n";
    }
    f << "successes: " << result.successes << "/" << n_cells << "\n";
  }
  return result;
}

}  // namespace tsk
