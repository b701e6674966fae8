#include "tsk/skilldsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>

namespace tsk::dsl {

namespace {

// ---------------------------------------------------------------------------
// Lexing

enum class Tok { word, number, lparen, rparen, comma, lbracket, rbracket, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double value = 0.0;
  int line = 0;
  int col = 0;
};

bool word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}
bool number_start(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}
bool number_char(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-' ||
         c == 'e' || c == 'E';
}

std::vector<Token> lex_line(const std::string& line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const int col = static_cast<int>(i) + 1;
    if (word_start(c)) {
      std::size_t j = i;
      while (j < line.size() && word_char(line[j])) ++j;
      out.push_back({Tok::word, line.substr(i, j - i), 0.0, line_no, col});
      i = j;
    } else if (number_start(c)) {
      std::size_t j = i;
      while (j < line.size() && number_char(line[j])) ++j;
      const std::string text = line.substr(i, j - i);
      char* endp = nullptr;
      const double v = std::strtod(text.c_str(), &endp);
      if (endp != text.c_str() + text.size() || text.empty())
        throw ParseError("malformed number '" + text + "'", line_no, col);
      out.push_back({Tok::number, text, v, line_no, col});
      i = j;
    } else if (c == '(') {
      out.push_back({Tok::lparen, "(", 0.0, line_no, col});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::rparen, ")", 0.0, line_no, col});
      ++i;
    } else if (c == ',') {
      out.push_back({Tok::comma, ",", 0.0, line_no, col});
      ++i;
    } else if (c == '[') {
      out.push_back({Tok::lbracket, "[", 0.0, line_no, col});
      ++i;
    } else if (c == ']') {
      out.push_back({Tok::rbracket, "]", 0.0, line_no, col});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line_no, col);
    }
  }
  out.push_back({Tok::end, "", 0.0, line_no, static_cast<int>(line.size()) + 1});
  return out;
}

struct Cursor {
  std::vector<Token> toks;
  std::size_t pos = 0;

  const Token& peek() const { return toks[pos]; }
  const Token& next() { return toks[std::min(pos++, toks.size() - 1)]; }
  bool at_end() const { return toks[pos].kind == Tok::end; }

  const Token& expect(Tok kind, const std::string& what) {
    const Token& t = next();
    if (t.kind != kind) throw ParseError("expected " + what + ", got '" + t.text + "'", t.line, t.col);
    return t;
  }
};

bool is_identifier(const std::string& s) {
  if (s.empty() || !word_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_feature(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos || dot != s.rfind('.')) return false;
  return is_identifier(s.substr(0, dot)) && is_identifier(s.substr(dot + 1));
}

// ---------------------------------------------------------------------------
// Expression parsing

Expr parse_pt(Cursor& cur);
Expr parse_dir(Cursor& cur);

double parse_num(Cursor& cur) { return cur.expect(Tok::number, "a number").value; }

const std::set<std::string> kPointFns = {"offset", "midpoint"};
const std::set<std::string> kDirFns = {"toward", "horizontal_toward"};
const std::set<std::string> kScalarFns = {"dist", "angle", "height", "along"};

Expr parse_pt(Cursor& cur) {
  const Token t = cur.next();
  if (t.kind != Tok::word)
    throw ParseError("expected a point expression, got '" + t.text + "'", t.line, t.col);
  if (is_feature(t.text)) return Expr{ExprKind::feature, t.text, 0.0, {}};
  if (t.text == "offset") {
    cur.expect(Tok::lparen, "'('");
    Expr e{ExprKind::offset, "", 0.0, {}};
    e.args.push_back(parse_pt(cur));
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_dir(cur));
    cur.expect(Tok::comma, "','");
    e.scalar = parse_num(cur);
    cur.expect(Tok::rparen, "')'");
    return e;
  }
  if (t.text == "midpoint") {
    cur.expect(Tok::lparen, "'('");
    Expr e{ExprKind::midpoint, "", 0.0, {}};
    e.args.push_back(parse_pt(cur));
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_pt(cur));
    cur.expect(Tok::rparen, "')'");
    return e;
  }
  if (kDirFns.count(t.text) || kScalarFns.count(t.text))
    throw ParseError("'" + t.text + "' is not a point expression", t.line, t.col);
  throw ParseError("unknown function '" + t.text + "'", t.line, t.col);
}

Expr parse_dir(Cursor& cur) {
  const Token t = cur.next();
  if (t.kind != Tok::word)
    throw ParseError("expected a direction expression, got '" + t.text + "'", t.line, t.col);
  if (is_feature(t.text)) return Expr{ExprKind::feature, t.text, 0.0, {}};
  if (t.text == "toward" || t.text == "horizontal_toward") {
    cur.expect(Tok::lparen, "'('");
    Expr e{t.text == "toward" ? ExprKind::toward : ExprKind::horizontal_toward, "", 0.0, {}};
    e.args.push_back(parse_pt(cur));
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_pt(cur));
    cur.expect(Tok::rparen, "')'");
    return e;
  }
  if (kPointFns.count(t.text) || kScalarFns.count(t.text))
    throw ParseError("'" + t.text + "' is not a direction expression", t.line, t.col);
  throw ParseError("unknown function '" + t.text + "'", t.line, t.col);
}

Expr parse_sexpr(Cursor& cur) {
  const Token t = cur.next();
  if (t.kind != Tok::word || !kScalarFns.count(t.text)) {
    if (t.kind == Tok::word && (kPointFns.count(t.text) || kDirFns.count(t.text) || is_feature(t.text)))
      throw ParseError("'" + t.text + "' is not scalar-valued (want dist/angle/height/along)",
                       t.line, t.col);
    throw ParseError("unknown function '" + t.text + "'", t.line, t.col);
  }
  cur.expect(Tok::lparen, "'('");
  Expr e;
  if (t.text == "dist") {
    e.kind = ExprKind::dist;
    e.args.push_back(parse_pt(cur));
    if (cur.peek().kind == Tok::rparen)
      throw ParseError("dist expects 2 points", t.line, t.col);
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_pt(cur));
  } else if (t.text == "angle") {
    e.kind = ExprKind::angle;
    e.args.push_back(parse_dir(cur));
    if (cur.peek().kind == Tok::rparen)
      throw ParseError("angle expects 2 directions", t.line, t.col);
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_dir(cur));
  } else if (t.text == "height") {
    e.kind = ExprKind::height;
    e.args.push_back(parse_pt(cur));
  } else {
    e.kind = ExprKind::along;
    e.args.push_back(parse_pt(cur));
    if (cur.peek().kind == Tok::rparen)
      throw ParseError("along expects a point and a direction", t.line, t.col);
    cur.expect(Tok::comma, "','");
    e.args.push_back(parse_dir(cur));
  }
  cur.expect(Tok::rparen, "')'");
  return e;
}

struct Line {
  int number = 0;
  Cursor cursor;
};

std::vector<Line> lex_statements(const std::string& text) {
  std::vector<Line> out;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    Cursor cur{lex_line(raw, line_no), 0};
    if (cur.at_end()) continue;  // blank or comment-only line
    out.push_back({line_no, std::move(cur)});
  }
  return out;
}

std::string expect_identifier(Cursor& cur, const std::string& what) {
  const Token& t = cur.expect(Tok::word, what);
  if (!is_identifier(t.text))
    throw ParseError("invalid " + what + " '" + t.text + "'", t.line, t.col);
  return t.text;
}

}  // namespace

TaskDescription parse_task(const std::string& text) {
  auto lines = lex_statements(text);
  if (lines.empty()) throw ParseError("no task declaration", 1);

  TaskDescription task;
  std::set<std::string> seen;
  bool have_task = false;
  for (auto& ln : lines) {
    Cursor& cur = ln.cursor;
    const Token& head = cur.expect(Tok::word, "a statement keyword");
    if (!have_task) {
      if (head.text != "task")
        throw ParseError("expected 'task', got '" + head.text + "'", head.line, head.col);
      task.name = expect_identifier(cur, "task name");
      have_task = true;
    } else {
      if (head.text != "phase")
        throw ParseError("expected 'phase', got '" + head.text + "'", head.line, head.col);
      const std::string name = expect_identifier(cur, "phase name");
      if (!seen.insert(name).second)
        throw ParseError("duplicate phase name '" + name + "'", head.line, head.col);
      task.phases.push_back(name);
    }
    if (!cur.at_end()) {
      const Token& extra = cur.peek();
      throw ParseError("trailing input '" + extra.text + "'", extra.line, extra.col);
    }
  }
  if (task.phases.empty()) throw ParseError("task '" + task.name + "' declares no phases", lines.back().number);
  return task;
}

PhaseSpec parse_phase(const std::string& text) {
  auto lines = lex_statements(text);
  if (lines.empty()) throw ParseError("no phase declaration", 1);

  PhaseSpec phase;
  bool have_phase = false;
  int last_line = 1;
  for (auto& ln : lines) {
    last_line = ln.number;
    Cursor& cur = ln.cursor;
    const Token& head = cur.expect(Tok::word, "a statement keyword");
    if (!have_phase) {
      if (head.text != "phase")
        throw ParseError("expected 'phase', got '" + head.text + "'", head.line, head.col);
      phase.name = expect_identifier(cur, "phase name");
      have_phase = true;
    } else if (head.text == "soft") {
      Constraint c;
      c.expr = parse_sexpr(cur);
      const Token& kw = cur.expect(Tok::word, "'in'");
      if (kw.text != "in") throw ParseError("expected 'in', got '" + kw.text + "'", kw.line, kw.col);
      cur.expect(Tok::lbracket, "'['");
      c.lo = parse_num(cur);
      cur.expect(Tok::comma, "','");
      c.hi = parse_num(cur);
      const Token& rb = cur.expect(Tok::rbracket, "']'");
      if (c.lo > c.hi)
        throw ParseError("band lower bound exceeds upper bound", rb.line, rb.col);
      if (!cur.at_end()) {
        const Token& w = cur.expect(Tok::word, "'weight'");
        if (w.text != "weight")
          throw ParseError("expected 'weight', got '" + w.text + "'", w.line, w.col);
        c.weight = parse_num(cur);
        if (c.weight <= 0.0) throw ParseError("weight must be > 0", w.line, w.col);
      }
      phase.soft.push_back(std::move(c));
    } else if (head.text == "hard") {
      const Token& kw = cur.expect(Tok::word, "a hard-bound keyword");
      const double v = parse_num(cur);
      if (v <= 0.0) throw ParseError("hard bound must be > 0", kw.line, kw.col);
      if (kw.text == "max-linear-speed")
        phase.max_linear_speed = v;
      else if (kw.text == "max-angular-speed")
        phase.max_angular_speed = v;
      else
        throw ParseError("unknown hard bound '" + kw.text + "'", kw.line, kw.col);
    } else if (head.text == "stop") {
      const Token& kw = cur.expect(Tok::word, "a stop keyword");
      const double v = parse_num(cur);
      if (v < 0.0) throw ParseError("stop threshold must be >= 0", kw.line, kw.col);
      if (kw.text == "velocity-below")
        phase.stop.velocity_below = v;
      else if (kw.text == "distance-below")
        phase.stop.distance_below = v;
      else if (kw.text == "dwell")
        phase.stop.dwell = v;
      else
        throw ParseError("unknown stop keyword '" + kw.text + "'", kw.line, kw.col);
    } else {
      throw ParseError("expected 'soft', 'hard' or 'stop', got '" + head.text + "'", head.line,
                       head.col);
    }
    if (!cur.at_end()) {
      const Token& extra = cur.peek();
      throw ParseError("trailing input '" + extra.text + "'", extra.line, extra.col);
    }
  }
  if (phase.soft.empty())
    throw ParseError("phase '" + phase.name + "' has no soft constraints", last_line);
  return phase;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string fmt_num(double v) {
  // Shortest decimal that round-trips to the same double.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case ExprKind::feature:
      out += e.feature;
      return;
    case ExprKind::offset:
      out += "offset(";
      write_expr(out, e.args[0]);
      out += ", ";
      write_expr(out, e.args[1]);
      out += ", " + fmt_num(e.scalar) + ")";
      return;
    case ExprKind::midpoint:
    case ExprKind::toward:
    case ExprKind::horizontal_toward:
    case ExprKind::dist:
    case ExprKind::angle:
    case ExprKind::along: {
      static const std::map<ExprKind, std::string> names = {
          {ExprKind::midpoint, "midpoint"}, {ExprKind::toward, "toward"},
          {ExprKind::horizontal_toward, "horizontal_toward"}, {ExprKind::dist, "dist"},
          {ExprKind::angle, "angle"}, {ExprKind::along, "along"}};
      out += names.at(e.kind) + "(";
      write_expr(out, e.args[0]);
      out += ", ";
      write_expr(out, e.args[1]);
      out += ")";
      return;
    }
    case ExprKind::height:
      out += "height(";
      write_expr(out, e.args[0]);
      out += ")";
      return;
  }
}

}  // namespace

std::string serialize(const TaskDescription& task) {
  std::string out = "task " + task.name + "\n";
  for (const auto& p : task.phases) out += "phase " + p + "\n";
  return out;
}

std::string serialize(const PhaseSpec& phase) {
  std::string out = "phase " + phase.name + "\n";
  for (const auto& c : phase.soft) {
    out += "soft ";
    write_expr(out, c.expr);
    out += " in [" + fmt_num(c.lo) + ", " + fmt_num(c.hi) + "] weight " + fmt_num(c.weight) + "\n";
  }
  out += "hard max-linear-speed " + fmt_num(phase.max_linear_speed) + "\n";
  out += "hard max-angular-speed " + fmt_num(phase.max_angular_speed) + "\n";
  out += "stop velocity-below " + fmt_num(phase.stop.velocity_below) + "\n";
  out += "stop distance-below " + fmt_num(phase.stop.distance_below) + "\n";
  out += "stop dwell " + fmt_num(phase.stop.dwell) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Binding and evaluation

namespace {

struct FeatureLookup {
  const Scene* scene = nullptr;
  const std::map<std::string, ResolvedFeature>* bound = nullptr;

  // expects_direction selects the sort; returns nullopt when unresolved.
  std::optional<ResolvedFeature> find(const std::string& name, bool expects_direction) const {
    if (bound) {
      auto it = bound->find(name);
      if (it == bound->end() || it->second.is_direction != expects_direction) return std::nullopt;
      return it->second;
    }
    if (expects_direction) {
      if (auto it = scene->tool_dirs.find(name); it != scene->tool_dirs.end())
        return ResolvedFeature{true, true, it->second};
      if (auto it = scene->const_dirs.find(name); it != scene->const_dirs.end())
        return ResolvedFeature{false, true, it->second};
    } else {
      if (auto it = scene->tool_points.find(name); it != scene->tool_points.end())
        return ResolvedFeature{true, false, it->second};
      if (auto it = scene->const_points.find(name); it != scene->const_points.end())
        return ResolvedFeature{false, false, it->second};
    }
    return std::nullopt;
  }
};

Vec3 eval_point(const Expr& e, const FeatureLookup& lk, const Pose& pose);

Vec3 eval_dir(const Expr& e, const FeatureLookup& lk, const Pose& pose) {
  switch (e.kind) {
    case ExprKind::feature: {
      auto f = lk.find(e.feature, true);
      if (!f) throw BindError({e.feature});
      return f->tool_frame ? pose.rotate(f->value) : f->value;
    }
    case ExprKind::toward: {
      const Vec3 d = eval_point(e.args[1], lk, pose) - eval_point(e.args[0], lk, pose);
      const double n = d.norm();
      if (n < 1e-9) throw EvalError("toward: coincident points");
      return d / n;
    }
    case ExprKind::horizontal_toward: {
      Vec3 d = eval_point(e.args[1], lk, pose) - eval_point(e.args[0], lk, pose);
      d.z() = 0.0;
      const double n = d.norm();
      if (n < 1e-9) throw EvalError("horizontal_toward: no horizontal separation");
      return d / n;
    }
    default:
      throw EvalError("expression is not a direction");
  }
}

Vec3 eval_point(const Expr& e, const FeatureLookup& lk, const Pose& pose) {
  switch (e.kind) {
    case ExprKind::feature: {
      auto f = lk.find(e.feature, false);
      if (!f) throw BindError({e.feature});
      return f->tool_frame ? pose.apply(f->value) : f->value;
    }
    case ExprKind::offset:
      return eval_point(e.args[0], lk, pose) + e.scalar * eval_dir(e.args[1], lk, pose);
    case ExprKind::midpoint:
      return 0.5 * (eval_point(e.args[0], lk, pose) + eval_point(e.args[1], lk, pose));
    default:
      throw EvalError("expression is not a point");
  }
}

double eval_scalar(const Expr& e, const FeatureLookup& lk, const Pose& pose) {
  switch (e.kind) {
    case ExprKind::dist:
      return (eval_point(e.args[0], lk, pose) - eval_point(e.args[1], lk, pose)).norm();
    case ExprKind::angle: {
      const Vec3 u = eval_dir(e.args[0], lk, pose);
      const Vec3 v = eval_dir(e.args[1], lk, pose);
      return std::acos(std::clamp(u.dot(v), -1.0, 1.0));
    }
    case ExprKind::height:
      return eval_point(e.args[0], lk, pose).z();
    case ExprKind::along:
      return eval_point(e.args[0], lk, pose).dot(eval_dir(e.args[1], lk, pose));
    default:
      throw EvalError("expression is not scalar-valued");
  }
}

void collect_features(const Expr& e, bool expects_direction, const Scene& scene,
                      std::map<std::string, ResolvedFeature>& resolved,
                      std::vector<std::string>& missing) {
  if (e.kind == ExprKind::feature) {
    FeatureLookup lk{&scene, nullptr};
    if (auto f = lk.find(e.feature, expects_direction)) {
      resolved[e.feature] = *f;
    } else if (std::find(missing.begin(), missing.end(), e.feature) == missing.end()) {
      missing.push_back(e.feature);
    }
    return;
  }
  switch (e.kind) {
    case ExprKind::offset:
      collect_features(e.args[0], false, scene, resolved, missing);
      collect_features(e.args[1], true, scene, resolved, missing);
      break;
    case ExprKind::midpoint:
    case ExprKind::dist:
      collect_features(e.args[0], false, scene, resolved, missing);
      collect_features(e.args[1], false, scene, resolved, missing);
      break;
    case ExprKind::toward:
    case ExprKind::horizontal_toward:
      collect_features(e.args[0], false, scene, resolved, missing);
      collect_features(e.args[1], false, scene, resolved, missing);
      break;
    case ExprKind::angle:
      collect_features(e.args[0], true, scene, resolved, missing);
      collect_features(e.args[1], true, scene, resolved, missing);
      break;
    case ExprKind::height:
      collect_features(e.args[0], false, scene, resolved, missing);
      break;
    case ExprKind::along:
      collect_features(e.args[0], false, scene, resolved, missing);
      collect_features(e.args[1], true, scene, resolved, missing);
      break;
    case ExprKind::feature:
      break;
  }
}

}  // namespace

double BoundPhase::eval(std::size_t i, const Pose& tool_pose) const {
  FeatureLookup lk{nullptr, &features_};
  return eval_scalar(spec_.soft[i].expr, lk, tool_pose);
}

BoundPhase bind(const PhaseSpec& phase, const Scene& scene) {
  std::map<std::string, ResolvedFeature> resolved;
  std::vector<std::string> missing;
  for (const auto& c : phase.soft) collect_features(c.expr, false, scene, resolved, missing);
  if (!missing.empty()) throw BindError(std::move(missing));
  return BoundPhase(phase, std::move(resolved));
}

double eval_expr(const Expr& expr, const Scene& scene, const Pose& tool_pose) {
  FeatureLookup lk{&scene, nullptr};
  return eval_scalar(expr, lk, tool_pose);
}

}  // namespace tsk::dsl
