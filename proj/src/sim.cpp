#include "tsk/sim.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace tsk {

std::string to_string(PhaseEnd reason) {
  switch (reason) {
    case PhaseEnd::velocity: return "velocity";
    case PhaseEnd::distance: return "distance";
    case PhaseEnd::timeout: return "timeout";
  }
  return "?";
}

Simulator::Simulator(SimWorld world, ControllerConfig ctrl)
    : world_(std::move(world)), ctrl_(ctrl) {
  monitored_.emplace_back("heel", world_.tool.heel);
  monitored_.emplace_back("tip", world_.tool.tip);
  if (world_.tool.blade) monitored_.emplace_back("blade", *world_.tool.blade);
}

Simulator::StepResult Simulator::step(const Pose& pose, const Twist& twist) {
  const double dt = world_.cfg.dt;
  const double table = world_.cfg.table_height;
  const auto& rim = world_.container.rim_samples;

  Twist tw = twist;
  Pose cand = advance(pose, tw.linear, tw.angular, dt);
  std::set<std::pair<int, int>> now;
  std::vector<ContactEvent> fresh;

  const auto nearest_rim = [&rim](const Vec3& p) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rim.size(); ++k) {
      const double d = (rim[k] - p).norm();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return std::pair<std::size_t, double>(best, bd);
  };

  const auto remove_normal = [&](const Vec3& n) {
    Vec3 vw = pose.rotation * tw.linear;
    const double into = vw.dot(n);
    if (into < 0.0) {
      vw -= into * n;
      tw.linear = pose.rotation.conjugate() * vw;
      cand = advance(pose, tw.linear, tw.angular, dt);
      return true;
    }
    return false;
  };

  for (std::size_t round = 0; round < 2 * monitored_.size() + 1; ++round) {
    bool changed = false;
    for (std::size_t mi = 0; mi < monitored_.size(); ++mi) {
      const Vec3 cur = pose.apply(monitored_[mi].second);
      const Vec3 nxt = cand.apply(monitored_[mi].second);

      const std::pair<int, int> table_key(static_cast<int>(mi), static_cast<int>(Surface::table));
      if (!now.count(table_key) && nxt.z() < table - 1e-12) {
        now.insert(table_key);
        changed |= remove_normal(Vec3::UnitZ());
        if (!active_.count(table_key)) {
          ContactEvent ev;
          ev.time = time_ + dt;
          ev.surface = Surface::table;
          const Vec3 after = cand.apply(monitored_[mi].second);
          ev.point = Vec3(after.x(), after.y(), table);
          ev.normal = Vec3::UnitZ();
          ev.monitored = monitored_[mi].first;
          fresh.push_back(ev);
        }
      }

      if (rim.empty()) continue;
      const std::pair<int, int> rim_key(static_cast<int>(mi), static_cast<int>(Surface::rim));
      if (!now.count(rim_key)) {
        const auto [k_next, d_next] = nearest_rim(nxt);
        if (d_next < world_.cfg.contact_eps && nxt.z() < cur.z() - 1e-15) {
          now.insert(rim_key);
          const auto [k_cur, d_cur] = nearest_rim(cur);
          Vec3 n = cur - rim[k_cur];
          n = d_cur > 1e-12 ? Vec3(n / d_cur) : Vec3::UnitZ();
          changed |= remove_normal(n);
          if (!active_.count(rim_key)) {
            ContactEvent ev;
            ev.time = time_ + dt;
            ev.surface = Surface::rim;
            ev.point = rim[k_cur];
            ev.normal = n;
            ev.monitored = monitored_[mi].first;
            fresh.push_back(ev);
          }
          (void)k_next;
        }
      }
    }
    if (!changed) break;
  }

  // Last-resort clamp: rotation can still push a point marginally through
  // the table after the linear component was removed.
  double penetration = 0.0;
  for (const auto& m : monitored_)
    penetration = std::max(penetration, table - cand.apply(m.second).z());
  if (penetration > 0.0) cand.translation.z() += penetration;

  active_ = std::move(now);
  time_ += dt;

  StepResult out;
  out.pose = cand;
  if (!fresh.empty()) out.event = fresh.front();
  return out;
}

PhaseRecord Simulator::run_phase(const dsl::BoundPhase& phase, Pose& pose, Trajectory& traj) {
  const double dt = world_.cfg.dt;
  const HardBounds hard{phase.spec().max_linear_speed, phase.spec().max_angular_speed};
  const double start = time_;

  PhaseRecord rec;
  rec.name = phase.spec().name;

  while (true) {
    const Twist tw = tick(phase, pose, ctrl_, hard);
    const StepResult res = step(pose, tw);
    const double speed = (res.pose.translation - pose.translation).norm() / dt;
    pose = res.pose;

    Sample s;
    s.t = time_;
    s.pose = pose;
    s.phase = rec.name;
    s.y.resize(phase.size());
    double maxviol = 0.0;
    for (std::size_t i = 0; i < phase.size(); ++i) {
      const auto& c = phase.spec().soft[i];
      s.y[i] = phase.eval(i, pose);
      maxviol = std::max(maxviol, std::abs(std::clamp(s.y[i], c.lo, c.hi) - s.y[i]));
    }
    s.max_violation = maxviol;
    traj.samples.push_back(std::move(s));
    if (res.event) traj.contacts.push_back(*res.event);

    const double elapsed = time_ - start;
    rec.final_violation = maxviol;
    if (stop_check(elapsed, speed, maxviol, phase.spec().stop)) {
      rec.reason =
          maxviol < phase.spec().stop.distance_below ? PhaseEnd::distance : PhaseEnd::velocity;
      break;
    }
    if (elapsed + 0.5 * dt >= world_.cfg.max_phase_time) {
      rec.reason = PhaseEnd::timeout;
      break;
    }
  }
  rec.duration = time_ - start;
  return rec;
}

std::pair<Trajectory, RunReport> run_task(const SimWorld& world, const ControllerConfig& ctrl,
                                          const dsl::TaskDescription& task,
                                          const std::vector<dsl::BoundPhase>& phases) {
  Trajectory traj;
  RunReport rep;
  rep.task = task_kind_from_name(task.name);

  Simulator sim(world, ctrl);
  Pose pose = world.tool_initial_pose;
  try {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      traj.transitions.emplace_back(sim.time(), phases[i].spec().name);
      rep.phases.push_back(sim.run_phase(phases[i], pose, traj));
    }
  } catch (const Error& e) {
    rep.error = e.what();
    rep.success = false;
    return {std::move(traj), std::move(rep)};
  }

  bool timed_out = false;
  for (const auto& p : rep.phases) timed_out |= (p.reason == PhaseEnd::timeout);
  rep.success = !timed_out && judge(rep.task, traj, world);

  const Pose* prev = &world.tool_initial_pose;
  for (const auto& s : traj.samples) {
    rep.path_length += (s.pose.translation - prev->translation).norm();
    prev = &s.pose;
  }
  rep.contact_count = static_cast<int>(traj.contacts.size());
  return {std::move(traj), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Success predicates

namespace {

struct PhaseSpan {
  std::string phase;
  std::size_t first = 0;
  std::size_t last = 0;
};

std::vector<PhaseSpan> phase_spans(const Trajectory& traj) {
  std::vector<PhaseSpan> spans;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    if (spans.empty() || spans.back().phase != traj.samples[i].phase)
      spans.push_back({traj.samples[i].phase, i, i});
    else
      spans.back().last = i;
  }
  return spans;
}

// Superellipse radial term of a world point in the container frame; < 1 means
// the point projects inside the rim.
double rim_radial_term(const SimWorld& world, const Vec3& p_world) {
  const auto& m = world.container.model;
  const Vec3 q = m.pose.to_local(p_world);
  const double u = powabs(q.x() / m.a1, 2.0 / m.eps2) + powabs(q.y() / m.a2, 2.0 / m.eps2);
  return std::pow(u, m.eps2 / 2.0);
}

std::size_t sample_index_at(const Trajectory& traj, double t, double dt) {
  for (std::size_t i = 0; i < traj.samples.size(); ++i)
    if (std::abs(traj.samples[i].t - t) < 0.5 * dt) return i;
  return traj.samples.empty() ? 0 : traj.samples.size() - 1;
}

bool judge_scrape(const Trajectory& traj, const SimWorld& world) {
  const auto spans = phase_spans(traj);
  for (const auto& ev : traj.contacts) {
    if (ev.surface != Surface::rim) continue;
    const std::size_t at = sample_index_at(traj, ev.time, world.cfg.dt);
    const Sample& s = traj.samples[at];
    const Vec3 centroid = s.pose.apply(world.action_centroid);
    if (rim_radial_term(world, centroid) >= 1.0) continue;

    // A later phase must retreat along -major_axis by at least 3 cm.
    for (const auto& span : spans) {
      if (span.first <= at) continue;
      const Sample& a = traj.samples[span.first];
      const Sample& b = traj.samples[span.last];
      const Vec3 maj = a.pose.rotate(world.tool.major_axis);
      if ((a.pose.translation - b.pose.translation).dot(maj) >= 0.03) return true;
    }
  }
  return false;
}

bool judge_scoop(const Trajectory& traj, const SimWorld& world) {
  if (traj.samples.empty()) return false;
  const double top_z = world.container.top_centre.z();
  std::size_t deep = traj.samples.size();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    if (traj.samples[i].pose.apply(world.tool.tip).z() <= top_z - 0.06) {
      deep = i;
      break;
    }
  }
  if (deep == traj.samples.size()) return false;
  if (traj.samples.back().pose.apply(world.tool.tip).z() < top_z + 0.15) return false;
  for (std::size_t i = deep; i < traj.samples.size(); ++i) {
    const Vec3 n = traj.samples[i].pose.rotate(world.tool.action_normal);
    if (std::acos(std::clamp(n.z(), -1.0, 1.0)) >= 0.52) return false;
  }
  return true;
}

bool judge_cut(const Trajectory& traj, const SimWorld& world) {
  if (!world.tool.blade || traj.samples.empty()) return false;
  const Vec3 blade = *world.tool.blade;
  std::size_t touch = traj.samples.size();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    if (traj.samples[i].pose.apply(blade).z() <= world.cfg.table_height + 0.005) {
      touch = i;
      break;
    }
  }
  if (touch == traj.samples.size()) return false;
  const Sample& a = traj.samples[touch];
  const Sample& b = traj.samples.back();
  const Vec3 maj = a.pose.rotate(world.tool.major_axis);
  return (a.pose.translation - b.pose.translation).dot(maj) >= 0.05;
}

}  // namespace

bool judge(TaskKind task, const Trajectory& traj, const SimWorld& world) {
  switch (task) {
    case TaskKind::scrape: return judge_scrape(traj, world);
    case TaskKind::scoop: return judge_scoop(traj, world);
    case TaskKind::cut: return judge_cut(traj, world);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Export

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "t,x,y,z,qw,qx,qy,qz,phase,max_violation\n");
  for (const auto& s : traj.samples) {
    const auto& q = s.pose.rotation;
    const auto& t = s.pose.translation;
    std::fprintf(f, "%.4f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%s,%.9f\n", s.t, t.x(), t.y(), t.z(),
                 q.w(), q.x(), q.y(), q.z(), s.phase.c_str(), s.max_violation);
  }
  std::fclose(f);
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void write_events_json(const Trajectory& traj, const std::string& path) {
  nlohmann::json events = nlohmann::json::array();
  std::size_t ci = 0, ti = 0;
  while (ci < traj.contacts.size() || ti < traj.transitions.size()) {
    const bool take_transition =
        ti < traj.transitions.size() &&
        (ci >= traj.contacts.size() || traj.transitions[ti].first <= traj.contacts[ci].time);
    if (take_transition) {
      events.push_back({{"time", traj.transitions[ti].first},
                        {"kind", "phase_transition"},
                        {"detail", traj.transitions[ti].second}});
      ++ti;
    } else {
      const auto& ev = traj.contacts[ci];
      events.push_back({{"time", ev.time},
                        {"kind", ev.surface == Surface::table ? "contact_table" : "contact_rim"},
                        {"point", vec_json(ev.point)},
                        {"normal", vec_json(ev.normal)},
                        {"detail", ev.monitored}});
      ++ci;
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << events.dump(2) << "\n";
}

void write_report_json(const RunReport& report, const std::string& path) {
  nlohmann::json phases = nlohmann::json::array();
  nlohmann::json final_violations = nlohmann::json::object();
  for (const auto& p : report.phases) {
    phases.push_back({{"name", p.name},
                      {"reason", to_string(p.reason)},
                      {"duration", p.duration},
                      {"final_violation", p.final_violation}});
    final_violations[p.name] = p.final_violation;
  }
  nlohmann::json j{{"task", to_string(report.task)},
                   {"success", report.success},
                   {"phases", phases},
                   {"metrics",
                    {{"path_length", report.path_length},
                     {"contact_count", report.contact_count},
                     {"final_violations", final_violations}}},
                   {"error", report.error}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace tsk
