// Command-line front end: fit, features, run, matrix.
//
// Exit codes: 0 success, 1 I/O or malformed input, 2 fit failure,
// 3 no affordance for the task, 4 runtime failure (bind/eval/timeout or an
// unsuccessful run).

#include "tsk/assets.hpp"
#include "tsk/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const tsk::AffordanceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const tsk::FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tsk::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tsk::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw tsk::IoError("cannot write '" + out_path + "'");
  f << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adapts generic scrape/scoop/cut skills to point-cloud scenes"};
  app.require_subcommand(1);

  // fit ----------------------------------------------------------------
  std::string fit_cloud, fit_kind = "superquadric", fit_out;
  std::uint64_t fit_seed = 1;
  int fit_restarts = 6;
  auto* fit = app.add_subcommand("fit", "Fit one shape model to a cloud");
  fit->add_option("--cloud", fit_cloud, "point cloud file (PLY or XYZ)")->required();
  fit->add_option("--kind", fit_kind, "superquadric | superparaboloid");
  fit->add_option("--seed", fit_seed, "fit seed");
  fit->add_option("--restarts", fit_restarts, "number of restarts");
  fit->add_option("--out", fit_out, "output JSON file (default stdout)");

  // features -----------------------------------------------------------
  std::string feat_config, feat_out;
  auto* features = app.add_subcommand("features", "Report tool and container features");
  features->add_option("--config", feat_config, "run config JSON")->required();
  features->add_option("--out", feat_out, "output JSON file (default stdout)");

  // run ----------------------------------------------------------------
  std::string run_config, run_out;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  run->add_option("--config", run_config, "run config JSON")->required();
  run->add_option("--out", run_out, "override output directory");

  // matrix -------------------------------------------------------------
  std::string mat_config, mat_out;
  auto* matrix = app.add_subcommand("matrix", "Run a tool x container evaluation matrix");
  matrix->add_option("--config", mat_config, "matrix config JSON")->required();
  matrix->add_option("--out", mat_out, "override output directory");

  std::uint64_t seed_override = 0;
  int restarts_override = 0;
  for (auto* sub : {features, run, matrix}) {
    sub->add_option("--seed", seed_override, "override config seed");
    sub->add_option("--restarts", restarts_override, "override config restarts");
  }

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) {
    return guarded([&] {
      const tsk::PointCloud cloud = tsk::load_cloud(fit_cloud);
      tsk::FitResult result;
      if (fit_kind == "superquadric" || fit_kind == "sq") {
        result = tsk::fit_superquadric(cloud, fit_restarts, fit_seed);
      } else if (fit_kind == "superparaboloid" || fit_kind == "sp") {
        result = tsk::fit_superparaboloid(cloud, fit_restarts, fit_seed);
        auto model = std::get<tsk::Superparaboloid>(result.model);
        result.model = tsk::refine_rim(model, cloud);
      } else {
        throw tsk::Error("unknown --kind '" + fit_kind + "'");
      }
      emit(tsk::fit_to_json(result), fit_out);
      return 0;
    });
  }

  if (features->parsed()) {
    return guarded([&] {
      tsk::RunConfig cfg = tsk::load_run_config(feat_config);
      if (features->count("--seed")) cfg.seed = seed_override;
      if (features->count("--restarts")) cfg.restarts = restarts_override;
      emit(tsk::feature_report(tsk::analyze_scene(cfg)), feat_out);
      return 0;
    });
  }

  if (run->parsed()) {
    return guarded([&] {
      tsk::RunConfig cfg = tsk::load_run_config(run_config);
      if (run->count("--seed")) cfg.seed = seed_override;
      if (run->count("--restarts")) cfg.restarts = restarts_override;
      if (!run_out.empty()) cfg.out_dir = run_out;
      const auto result = tsk::run_pipeline(cfg);
      if (!result.report.error.empty()) throw tsk::Error("execution: " + result.report.error);
      for (const auto& p : result.report.phases)
        std::printf("phase %-10s %-8s violation %.5f after %.2fs\n", p.name.c_str(),
                    tsk::to_string(p.reason).c_str(), p.final_violation, p.duration);
      std::printf("success: %s\n", result.report.success ? "true" : "false");
      return result.report.success ? 0 : 4;
    });
  }

  if (matrix->parsed()) {
    return guarded([&] {
      tsk::MatrixConfig cfg = tsk::load_matrix_config(mat_config);
      if (matrix->count("--seed")) cfg.base.seed = seed_override;
      if (matrix->count("--restarts")) cfg.base.restarts = restarts_override;
      if (!mat_out.empty()) cfg.base.out_dir = mat_out;
      const auto result = tsk::run_matrix(cfg);
      std::printf("matrix: %d/%zu cells succeeded\n", result.successes, result.cells.size());
      for (const auto& c : result.cells)
        std::printf("  %-12s x %-12s %s%s%s\n", c.tool.c_str(), c.container.c_str(),
                    c.success ? "pass" : "FAIL", c.error.empty() ? "" : "  ",
                    c.error.c_str());
      return 0;
    });
  }
  return 0;
}
