#include "tsk/assets.hpp"

#include "tsk/errors.hpp"
#include "tsk/sqmodel.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>

namespace tsk::assets {

namespace fs = std::filesystem;

namespace {

constexpr int kPartPoints = 450;
constexpr int kContainerPoints = 900;
const Vec3 kContainerAt(0.40, 0.0, 0.0);

Pose at(double x, double y, double z) {
  Pose p;
  p.translation = Vec3(x, y, z);
  return p;
}

Superquadric sq_part(double a1, double a2, double a3, double e1, double e2, const Pose& pose) {
  return Superquadric{a1, a2, a3, e1, e2, pose};
}

struct ToolRecipe {
  Superquadric handle;
  // Action part is either a superquadric (blades) or a superparaboloid bowl.
  bool concave = false;
  Superquadric blade;
  Superparaboloid bowl;
};

ToolRecipe recipe_for(const std::string& name) {
  ToolRecipe r;
  if (name == "spatula") {
    r.handle = sq_part(0.100, 0.011, 0.011, 0.25, 1.0, at(-0.101, 0, 0));
    r.blade = sq_part(0.055, 0.040, 0.004, 0.25, 0.25, at(0.056, 0, 0));
  } else if (name == "knife_small") {
    r.handle = sq_part(0.055, 0.010, 0.010, 0.25, 1.0, at(-0.056, 0, 0));
    r.blade = sq_part(0.075, 0.013, 0.002, 0.25, 0.25, at(0.076, 0, 0));
  } else if (name == "knife_large") {
    r.handle = sq_part(0.065, 0.012, 0.012, 0.25, 1.0, at(-0.066, 0, 0));
    r.blade = sq_part(0.105, 0.018, 0.0025, 0.25, 0.25, at(0.106, 0, 0));
  } else if (name == "spoon") {
    r.handle = sq_part(0.090, 0.009, 0.009, 0.25, 1.0, at(-0.091, 0, 0));
    r.concave = true;
    r.bowl = Superparaboloid{0.035, 0.027, 0.018, 1.0, 1.0, at(0.036, 0, -0.009)};
  } else if (name == "scraper") {
    r.handle = sq_part(0.060, 0.011, 0.011, 0.25, 1.0, at(-0.061, 0, 0));
    r.blade = sq_part(0.045, 0.055, 0.003, 0.25, 0.25, at(0.046, 0, 0));
  } else if (name == "fork") {
    r.handle = sq_part(0.070, 0.010, 0.010, 0.25, 1.0, at(-0.071, 0, 0));
    r.blade = sq_part(0.060, 0.024, 0.0018, 0.25, 0.25, at(0.061, 0, 0));
  } else {
    throw Error("unknown tool asset '" + name + "'");
  }
  return r;
}

Superparaboloid container_model(const std::string& name) {
  Pose pose = at(kContainerAt.x(), kContainerAt.y(), kContainerAt.z());
  if (name == "bowl_small") return Superparaboloid{0.085, 0.085, 0.055, 0.9, 1.0, pose};
  if (name == "bowl_medium") return Superparaboloid{0.115, 0.110, 0.075, 1.0, 1.0, pose};
  if (name == "bowl_large") return Superparaboloid{0.150, 0.140, 0.100, 1.1, 1.0, pose};
  if (name == "pan") return Superparaboloid{0.160, 0.160, 0.045, 0.7, 1.0, pose};
  if (name == "dish") return Superparaboloid{0.110, 0.110, 0.020, 0.8, 1.0, pose};
  throw Error("unknown container asset '" + name + "'");
}

// Start placement shared by every tool: a 10 degree yaw (the orient phase
// has to undo it) and a hover position left of the container.
Pose start_placement() {
  Pose p;
  p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(10.0), Vec3::UnitZ()));
  p.translation = Vec3(-0.02, 0.0, 0.25);
  return p;
}

void append_labeled(PointCloud& into, const PointCloud& part, int label) {
  for (const auto& p : part.points) {
    into.points.push_back(p);
    into.labels->push_back(label);
  }
}

}  // namespace

PointCloud tool_cloud(const std::string& name) {
  const ToolRecipe r = recipe_for(name);
  PointCloud cloud;
  cloud.labels.emplace();
  append_labeled(cloud, synth_cloud(r.handle, kPartPoints, 0.0, 0), 0);
  if (r.concave)
    append_labeled(cloud, synth_cloud(r.bowl, kPartPoints, 0.0, 0), 1);
  else
    append_labeled(cloud, synth_cloud(r.blade, kPartPoints, 0.0, 0), 1);

  const Pose place = start_placement();
  for (auto& p : cloud.points) p = place.apply(p);
  return cloud;
}

PointCloud container_cloud(const std::string& name) {
  return synth_cloud(container_model(name), kContainerPoints, 0.0, 0);
}

std::vector<std::string> tool_names() {
  return {"spatula", "knife_small", "knife_large", "spoon", "scraper"};
}

std::vector<std::string> container_names() {
  return {"bowl_small", "bowl_medium", "bowl_large", "pan"};
}

void write_demo_suite(const std::string& out_dir, const std::string& dsl_dir) {
  const fs::path out(out_dir);
  const fs::path dsl = fs::absolute(dsl_dir);
  fs::create_directories(out / "clouds");
  fs::create_directories(out / "configs");

  auto all_tools = tool_names();
  all_tools.push_back("fork");
  for (const auto& name : all_tools)
    save_cloud_ply(tool_cloud(name), (out / "clouds" / (name + ".ply")).string());
  auto all_containers = container_names();
  all_containers.push_back("dish");
  for (const auto& name : all_containers)
    save_cloud_ply(container_cloud(name), (out / "clouds" / (name + ".ply")).string());

  const auto demo_config = [&](const std::string& task, const std::string& tool,
                               const std::string& container) {
    nlohmann::json j{
        {"tool_cloud", "../clouds/" + tool + ".ply"},
        {"container_cloud", "../clouds/" + container + ".ply"},
        {"task_file", (dsl / "tasks" / (task + ".task")).string()},
        {"phase_dir", (dsl / "phases" / task).string()},
        {"out_dir", "../out/" + task + "_demo"},
        {"seed", 20260810},
        {"restarts", 6},
    };
    std::ofstream f((out / "configs" / (task + "_demo.json")).string());
    f << j.dump(2) << "\n";
  };
  demo_config("scrape", "spatula", "bowl_medium");
  demo_config("scoop", "spoon", "bowl_large");
  demo_config("cut", "knife_large", "dish");

  nlohmann::json tools = nlohmann::json::array();
  for (const auto& name : tool_names())
    tools.push_back({{"id", name}, {"cloud", "../clouds/" + name + ".ply"}});
  nlohmann::json containers = nlohmann::json::array();
  for (const auto& name : container_names())
    containers.push_back({{"id", name}, {"cloud", "../clouds/" + name + ".ply"}});
  nlohmann::json matrix{
      {"tools", tools},
      {"containers", containers},
      {"task_file", (dsl / "tasks" / "scrape.task").string()},
      {"phase_dir", (dsl / "phases" / "scrape").string()},
      {"out_dir", "../out/matrix_scrape"},
      {"seed", 20260810},
      {"restarts", 6},
      {"parallel", 2},
  };
  std::ofstream f((out / "configs" / "matrix_scrape.json").string());
  f << matrix.dump(2) << "\n";
}

}  // namespace tsk::assets
