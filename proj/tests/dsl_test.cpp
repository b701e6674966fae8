#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tsk/skilldsl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace tsk;
using namespace tsk::dsl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(static_cast<bool>(in), "missing file ", path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Scene demo_scene() {
  Scene s;
  s.tool_points["tool.tip"] = Vec3(0.1, 0, 0);
  s.tool_points["tool.heel"] = Vec3(0.02, 0, 0);
  s.tool_points["tool.grasp"] = Vec3(-0.1, 0, 0);
  s.tool_dirs["tool.major_axis"] = Vec3(1, 0, 0);
  s.tool_dirs["tool.action_normal"] = Vec3(0, 0, 1);
  s.const_points["target.edge"] = Vec3(0.3, 0, 0.08);
  s.const_points["target.top_centre"] = Vec3(0.4, 0, 0.08);
  s.const_dirs["target.rim_normal"] = Vec3(0, 0, 1);
  return s;
}

// Random valid phase generator for round-trip property tests.
Expr random_pt(Rng& rng, int depth);
Expr random_dir(Rng& rng, int depth);

std::string random_feature(Rng& rng, bool dir) {
  static const char* points[] = {"tool.tip", "tool.heel", "tool.grasp", "target.edge",
                                 "target.top_centre"};
  static const char* dirs[] = {"tool.major_axis", "tool.action_normal", "world.up",
                               "target.rim_normal"};
  if (dir) return dirs[static_cast<int>(rng.uniform(0, 4)) % 4];
  return points[static_cast<int>(rng.uniform(0, 5)) % 5];
}

double random_num(Rng& rng) {
  const double v = rng.uniform(-2.0, 2.0);
  return std::round(v * 1000.0) / 1000.0;
}

Expr random_pt(Rng& rng, int depth) {
  const double roll = depth <= 0 ? 0.0 : rng.uniform();
  if (roll < 0.6) return Expr{ExprKind::feature, random_feature(rng, false), 0.0, {}};
  if (roll < 0.8) {
    Expr e{ExprKind::offset, "", random_num(rng), {}};
    e.args.push_back(random_pt(rng, depth - 1));
    e.args.push_back(random_dir(rng, depth - 1));
    return e;
  }
  Expr e{ExprKind::midpoint, "", 0.0, {}};
  e.args.push_back(random_pt(rng, depth - 1));
  e.args.push_back(random_pt(rng, depth - 1));
  return e;
}

Expr random_dir(Rng& rng, int depth) {
  const double roll = depth <= 0 ? 0.0 : rng.uniform();
  if (roll < 0.6) return Expr{ExprKind::feature, random_feature(rng, true), 0.0, {}};
  Expr e{roll < 0.8 ? ExprKind::toward : ExprKind::horizontal_toward, "", 0.0, {}};
  e.args.push_back(random_pt(rng, depth - 1));
  e.args.push_back(random_pt(rng, depth - 1));
  return e;
}

Expr random_sexpr(Rng& rng) {
  const int pick = static_cast<int>(rng.uniform(0, 4)) % 4;
  Expr e;
  switch (pick) {
    case 0:
      e.kind = ExprKind::dist;
      e.args.push_back(random_pt(rng, 2));
      e.args.push_back(random_pt(rng, 2));
      break;
    case 1:
      e.kind = ExprKind::angle;
      e.args.push_back(random_dir(rng, 2));
      e.args.push_back(random_dir(rng, 2));
      break;
    case 2:
      e.kind = ExprKind::height;
      e.args.push_back(random_pt(rng, 2));
      break;
    default:
      e.kind = ExprKind::along;
      e.args.push_back(random_pt(rng, 2));
      e.args.push_back(random_dir(rng, 2));
      break;
  }
  return e;
}

PhaseSpec random_phase(Rng& rng) {
  PhaseSpec p;
  p.name = "phase" + std::to_string(static_cast<int>(rng.uniform(0, 1000)));
  const int n = 1 + static_cast<int>(rng.uniform(0, 4));
  for (int i = 0; i < n; ++i) {
    Constraint c;
    c.expr = random_sexpr(rng);
    c.lo = random_num(rng);
    c.hi = c.lo + std::abs(random_num(rng));
    c.weight = 0.1 + std::abs(random_num(rng));
    p.soft.push_back(std::move(c));
  }
  p.max_linear_speed = 0.05 + rng.uniform(0.0, 0.3);
  p.max_angular_speed = 0.1 + rng.uniform(0.0, 0.8);
  p.stop.velocity_below = rng.uniform(0.0, 0.01);
  p.stop.distance_below = rng.uniform(0.0, 0.02);
  p.stop.dwell = rng.uniform(0.0, 1.0);
  return p;
}

}  // namespace

TEST_CASE("task file parsing") {
  const auto task = parse_task("task scrape\nphase orient\nphase approach\n");
  CHECK(task.name == "scrape");
  REQUIRE(task.phases.size() == 2);
  CHECK(task.phases[0] == "orient");
  CHECK(task.phases[1] == "approach");
}

TEST_CASE("duplicate phase name reports the line") {
  try {
    parse_task("task t\nphase orient\nphase orient\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("empty task file") {
  try {
    parse_task("");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("no task declaration") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_task("task lonely\n"), ParseError);  // zero phases
}

TEST_CASE("phase parsing with defaults") {
  const auto phase = parse_phase(
      "phase approach\n"
      "soft dist(tool.heel, offset(target.edge, world.up, 0.20)) in [0, 0.01] weight 1.0\n"
      "stop velocity-below 0.005\n"
      "stop distance-below 0.01\n");
  CHECK(phase.name == "approach");
  REQUIRE(phase.soft.size() == 1);
  CHECK(phase.soft[0].lo == 0.0);
  CHECK(phase.soft[0].hi == 0.01);
  CHECK(phase.soft[0].weight == 1.0);
  CHECK(phase.soft[0].expr.kind == ExprKind::dist);
  CHECK(phase.soft[0].expr.args[1].kind == ExprKind::offset);
  CHECK(phase.soft[0].expr.args[1].scalar == 0.20);
  // defaults
  CHECK(phase.max_linear_speed == 0.1);
  CHECK(phase.max_angular_speed == 0.5);
  CHECK(phase.stop.velocity_below == 0.005);
  CHECK(phase.stop.distance_below == 0.01);
  CHECK(phase.stop.dwell == 0.2);
}

TEST_CASE("phase diagnostics carry locations") {
  SUBCASE("arity") {
    try {
      parse_phase("phase p\nsoft dist(tool.heel) in [0, 1]\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
      CHECK(std::string(e.what()).find("dist expects 2 points") != std::string::npos);
    }
  }
  SUBCASE("band order") {
    CHECK_THROWS_AS(parse_phase("phase p\nsoft height(tool.tip) in [0.5, 0.1]\n"), ParseError);
  }
  SUBCASE("unknown function") {
    CHECK_THROWS_AS(parse_phase("phase p\nsoft distance(tool.tip, tool.heel) in [0, 1]\n"),
                    ParseError);
  }
  SUBCASE("unknown stop keyword") {
    CHECK_THROWS_AS(parse_phase("phase p\nsoft height(tool.tip) in [0, 1]\nstop speed 1\n"),
                    ParseError);
  }
  SUBCASE("no soft constraints") {
    CHECK_THROWS_AS(parse_phase("phase p\nstop dwell 0.5\n"), ParseError);
  }
  SUBCASE("sort mismatch") {
    CHECK_THROWS_AS(parse_phase("phase p\nsoft dist(tool.tip, toward(a.b, c.d)) in [0, 1]\n"),
                    ParseError);
  }
}

TEST_CASE("serialization round trip on the approach example") {
  const std::string text =
      "phase approach\n"
      "soft dist(tool.heel, offset(target.edge, world.up, 0.20)) in [0, 0.01]\n"
      "stop velocity-below 0.005\n";
  const PhaseSpec phase = parse_phase(text);
  const std::string canon = serialize(phase);
  CHECK(parse_phase(canon) == phase);
  // Canonical form spells out defaults.
  CHECK(canon.find("weight 1") != std::string::npos);
  CHECK(canon.find("stop dwell 0.2") != std::string::npos);
  CHECK(canon.find("hard max-linear-speed 0.1") != std::string::npos);
}

TEST_CASE("round trip property over generated phases") {
  Rng rng(4242);
  for (int i = 0; i < 100; ++i) {
    const PhaseSpec phase = random_phase(rng);
    const std::string text = serialize(phase);
    const PhaseSpec back = parse_phase(text);
    CHECK(back == phase);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("task round trip") {
  TaskDescription task{"scoop", {"orient", "approach", "insert", "sweep", "lift"}};
  CHECK(parse_task(serialize(task)) == task);
}

TEST_CASE("fuzzing never crashes the parsers") {
  Rng rng(99);
  int diagnostics = 0;
  for (int i = 0; i < 2000; ++i) {
    const int len = static_cast<int>(rng.uniform(0, 120));
    std::string text;
    for (int k = 0; k < len; ++k) text.push_back(static_cast<char>(rng.uniform(0, 256)));
    try {
      parse_phase(text);
    } catch (const ParseError& e) {
      CHECK(e.line >= 1);
      ++diagnostics;
    }
    try {
      parse_task(text);
    } catch (const ParseError& e) {
      CHECK(e.line >= 1);
      ++diagnostics;
    }
  }
  CHECK(diagnostics > 0);
}

TEST_CASE("binding resolves tool features through the pose") {
  const Scene scene = demo_scene();
  const PhaseSpec phase = parse_phase(
      "phase p\n"
      "soft dist(tool.tip, target.edge) in [0, 0.01]\n");
  const BoundPhase bound = bind(phase, scene);

  Pose pose;  // identity
  const double y0 = bound.eval(0, pose);
  CHECK(y0 == doctest::Approx((Vec3(0.1, 0, 0) - Vec3(0.3, 0, 0.08)).norm()));

  pose.translation = Vec3(0.1, 0, 0.0);
  const double y1 = bound.eval(0, pose);
  CHECK(y1 == doctest::Approx((Vec3(0.2, 0, 0) - Vec3(0.3, 0, 0.08)).norm()));
  CHECK(y1 < y0);
}

TEST_CASE("bind error lists every missing name") {
  const Scene scene = demo_scene();  // no tool.blade
  const PhaseSpec phase = parse_phase(
      "phase p\n"
      "soft dist(tool.blade, target.bottom) in [0, 0.01]\n");
  try {
    bind(phase, scene);
    FAIL("expected BindError");
  } catch (const BindError& e) {
    REQUIRE(e.missing.size() == 2);
    CHECK(e.missing[0] == "tool.blade");
    CHECK(e.missing[1] == "target.bottom");
  }
}

TEST_CASE("binding constant-only expressions ignores the pose") {
  const Scene scene = demo_scene();
  const PhaseSpec phase = parse_phase(
      "phase p\n"
      "soft dist(target.edge, target.top_centre) in [0, 1]\n");
  const BoundPhase bound = bind(phase, scene);
  Pose a;
  Pose b;
  b.translation = Vec3(1, 2, 3);
  b.rotation = quat_exp(Vec3(0.4, 0.2, -0.7));
  CHECK(bound.eval(0, a) == bound.eval(0, b));
}

TEST_CASE("expression semantics") {
  const Scene scene = demo_scene();
  const Pose id;

  const auto eval_text = [&](const std::string& expr_text) {
    const PhaseSpec phase = parse_phase("phase p\nsoft " + expr_text + " in [0, 1]\n");
    return eval_expr(phase.soft[0].expr, scene, id);
  };

  Scene s2 = demo_scene();
  s2.const_points["target.a"] = Vec3(0, 0, 0);
  s2.const_points["target.b"] = Vec3(3, 4, 0);
  const PhaseSpec dist_phase = parse_phase("phase p\nsoft dist(target.a, target.b) in [0, 1]\n");
  CHECK(eval_expr(dist_phase.soft[0].expr, s2, id) == doctest::Approx(5.0));

  CHECK(eval_text("angle(world.up, world.up)") == doctest::Approx(0.0));
  CHECK(eval_text("angle(tool.major_axis, world.up)") == doctest::Approx(kPi / 2));
  CHECK(eval_text("height(target.edge)") == doctest::Approx(0.08));
  CHECK(eval_text("along(target.edge, tool.major_axis)") == doctest::Approx(0.3));
  CHECK(eval_text("dist(midpoint(tool.grasp, tool.tip), target.edge)") ==
        doctest::Approx((Vec3(0, 0, 0) - Vec3(0.3, 0, 0.08)).norm()));
  CHECK(eval_text("along(offset(target.edge, world.up, 0.2), world.up)") ==
        doctest::Approx(0.28));
  // toward: unit direction from p to q
  CHECK(eval_text("angle(toward(tool.grasp, tool.tip), tool.major_axis)") ==
        doctest::Approx(0.0));

  // horizontal_toward zeroes z before normalizing
  Scene s3 = demo_scene();
  s3.const_points["target.high"] = Vec3(0.0, 1.0, 5.0);
  const PhaseSpec hphase =
      parse_phase("phase p\nsoft angle(horizontal_toward(target.a, target.high), world.up) in [0, 4]\n");
  s3.const_points["target.a"] = Vec3(0, 0, 0);
  CHECK(eval_expr(hphase.soft[0].expr, s3, id) == doctest::Approx(kPi / 2));
}

TEST_CASE("degenerate directions raise EvalError") {
  Scene scene = demo_scene();
  scene.const_points["target.same"] = scene.const_points["target.edge"];
  const PhaseSpec phase = parse_phase(
      "phase p\n"
      "soft angle(toward(target.edge, target.same), world.up) in [0, 4]\n");
  const BoundPhase bound = bind(phase, scene);
  CHECK_THROWS_AS(bound.eval(0, Pose{}), EvalError);
}

TEST_CASE("angle is symmetric") {
  Scene scene = demo_scene();
  const Pose id;
  const PhaseSpec ab = parse_phase("phase p\nsoft angle(tool.major_axis, target.rim_normal) in [0, 4]\n");
  const PhaseSpec ba = parse_phase("phase p\nsoft angle(target.rim_normal, tool.major_axis) in [0, 4]\n");
  CHECK(eval_expr(ab.soft[0].expr, scene, id) == eval_expr(ba.soft[0].expr, scene, id));
}

TEST_CASE("shipped phase files parse and carry the metric offsets") {
  const std::string root = TOOLSKILL_DSL_DIR;
  const auto scrape = parse_task(slurp(root + "/tasks/scrape.task"));
  const auto scoop = parse_task(slurp(root + "/tasks/scoop.task"));
  const auto cut = parse_task(slurp(root + "/tasks/cut.task"));
  CHECK(scrape.phases.size() == 4);
  CHECK(scoop.phases.size() == 5);
  CHECK(cut.phases.size() == 4);

  const auto offsets_of = [&](const std::string& task, const TaskDescription& td) {
    std::vector<double> out;
    for (const auto& name : td.phases) {
      const auto phase = parse_phase(slurp(root + "/phases/" + task + "/" + name + ".phase"));
      for (const auto& c : phase.soft) {
        // collect every offset scalar in the constraint tree
        std::vector<const Expr*> stack{&c.expr};
        while (!stack.empty()) {
          const Expr* e = stack.back();
          stack.pop_back();
          if (e->kind == ExprKind::offset) out.push_back(e->scalar);
          for (const auto& a : e->args) stack.push_back(&a);
        }
      }
    }
    return out;
  };

  const auto has = [](const std::vector<double>& v, double x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  CHECK(has(offsets_of("scrape", scrape), 0.20));
  const auto scoop_offsets = offsets_of("scoop", scoop);
  CHECK(has(scoop_offsets, 0.20));
  CHECK(has(scoop_offsets, -0.065));
  CHECK(has(scoop_offsets, 0.05));
  CHECK(has(offsets_of("cut", cut), 0.30));
}
