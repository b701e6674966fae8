#include "tsk/sqmodel.hpp"

#include "tsk/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsk {

namespace {

double clamp_axis(double a) { return std::clamp(a, kMinSemiAxis, kMaxSemiAxis); }
double clamp_exp(double e) { return std::clamp(e, kMinExponent, kMaxExponent); }

double sq_F_local(double a1, double a2, double a3, double e1, double e2, const Vec3& q) {
  const double u = powabs(q.x() / a1, 2.0 / e2) + powabs(q.y() / a2, 2.0 / e2);
  return std::pow(u, e2 / e1) + powabs(q.z() / a3, 2.0 / e1);
}

double sp_G_local(double a1, double a2, double a3, double e1, double e2, const Vec3& q) {
  const double u = powabs(q.x() / a1, 2.0 / e2) + powabs(q.y() / a2, 2.0 / e2);
  return std::pow(u, e2 / e1) - q.z() / a3;
}

// d/dx of the shared radial term u^(e2/e1); the same expression serves both
// models. Zero within 1e-12 of the coordinate plane (subgradient choice).
double radial_partial(double coord, double axis, double u, double e1, double e2) {
  if (std::abs(coord) < 1e-12 || u <= 0.0) return 0.0;
  return 2.0 / (e1 * axis) * std::pow(u, e2 / e1 - 1.0) * powabs(coord / axis, 2.0 / e2 - 1.0) *
         sgn(coord);
}

}  // namespace

double implicit_sq(const Superquadric& m, const Vec3& p_world) {
  return sq_F_local(m.a1, m.a2, m.a3, m.eps1, m.eps2, m.pose.to_local(p_world));
}

double implicit_sp(const Superparaboloid& m, const Vec3& p_world) {
  return sp_G_local(m.a1, m.a2, m.a3, m.eps1, m.eps2, m.pose.to_local(p_world));
}

Vec3 grad_implicit(const Superquadric& m, const Vec3& p_world) {
  const Vec3 q = m.pose.to_local(p_world);
  const double u = powabs(q.x() / m.a1, 2.0 / m.eps2) + powabs(q.y() / m.a2, 2.0 / m.eps2);
  Vec3 g;
  g.x() = radial_partial(q.x(), m.a1, u, m.eps1, m.eps2);
  g.y() = radial_partial(q.y(), m.a2, u, m.eps1, m.eps2);
  g.z() = std::abs(q.z()) < 1e-12
              ? 0.0
              : 2.0 / (m.eps1 * m.a3) * powabs(q.z() / m.a3, 2.0 / m.eps1 - 1.0) * sgn(q.z());
  return m.pose.rotate(g);
}

Vec3 grad_implicit(const Superparaboloid& m, const Vec3& p_world) {
  const Vec3 q = m.pose.to_local(p_world);
  const double u = powabs(q.x() / m.a1, 2.0 / m.eps2) + powabs(q.y() / m.a2, 2.0 / m.eps2);
  Vec3 g;
  g.x() = radial_partial(q.x(), m.a1, u, m.eps1, m.eps2);
  g.y() = radial_partial(q.y(), m.a2, u, m.eps1, m.eps2);
  g.z() = -1.0 / m.a3;  // the height term is linear, no singularity to guard
  return m.pose.rotate(g);
}

PointCloud synth_cloud(const Superquadric& m, int n, double noise_sigma, std::uint64_t seed) {
  if (n < 10) throw Error("synth_cloud needs n >= 10");
  if (noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");
  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  PointCloud cloud;
  cloud.points.reserve(n);
  Rng rng(seed);
  for (int i = 0; i < g && static_cast<int>(cloud.points.size()) < n; ++i) {
    const double eta = -kPi / 2.0 + kPi * (i + 0.5) / g;
    const double ce = std::pow(std::cos(eta), m.eps1);  // cos(eta) > 0 on the open interval
    const double se = sgn(std::sin(eta)) * powabs(std::sin(eta), m.eps1);
    for (int j = 0; j < g && static_cast<int>(cloud.points.size()) < n; ++j) {
      const double w = -kPi + 2.0 * kPi * (j + 0.5) / g;
      Vec3 local(m.a1 * ce * sgn(std::cos(w)) * powabs(std::cos(w), m.eps2),
                 m.a2 * ce * sgn(std::sin(w)) * powabs(std::sin(w), m.eps2), m.a3 * se);
      Vec3 p = m.pose.apply(local);
      if (noise_sigma > 0.0)
        p += noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

PointCloud synth_cloud(const Superparaboloid& m, int n, double noise_sigma, std::uint64_t seed) {
  if (n < 10) throw Error("synth_cloud needs n >= 10");
  if (noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");
  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  PointCloud cloud;
  cloud.points.reserve(n);
  Rng rng(seed);
  for (int i = 0; i < g && static_cast<int>(cloud.points.size()) < n; ++i) {
    const double u = static_cast<double>(i + 1) / g;  // height fraction, rim at u = 1
    const double s = std::pow(u, m.eps1 / 2.0);
    for (int j = 0; j < g && static_cast<int>(cloud.points.size()) < n; ++j) {
      const double w = -kPi + 2.0 * kPi * (j + 0.5) / g;
      Vec3 local(m.a1 * s * sgn(std::cos(w)) * powabs(std::cos(w), m.eps2),
                 m.a2 * s * sgn(std::sin(w)) * powabs(std::sin(w), m.eps2), u * m.a3);
      Vec3 p = m.pose.apply(local);
      if (noise_sigma > 0.0)
        p += noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

std::vector<Vec3> rim_superellipse(const Superparaboloid& m, int n) {
  if (n < 8) throw Error("rim_superellipse needs n >= 8");
  std::vector<Vec3> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * kPi * k / n;
    Vec3 local(m.a1 * sgn(std::cos(theta)) * powabs(std::cos(theta), m.eps2),
               m.a2 * sgn(std::sin(theta)) * powabs(std::sin(theta), m.eps2), m.a3);
    out.push_back(m.pose.apply(local));
  }
  return out;
}

Superparaboloid refine_rim(const Superparaboloid& m, const PointCloud& cloud) {
  std::vector<double> zs;
  zs.reserve(cloud.size());
  for (const auto& p : cloud.points) zs.push_back(m.pose.to_local(p).z());
  Superparaboloid out = m;
  out.a3 = clamp_axis(std::max(percentile(std::move(zs), 99.0), 0.5 * m.a3));
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct InitGuess {
  double a[3] = {0.1, 0.1, 0.1};
  double e1 = 1.0, e2 = 1.0;
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Vec3 t = Vec3::Zero();
};

// Cyclic re-seatings of the principal axes: variant 0 keeps the frame
// as-is, 1 puts the major axis on local z, 2 puts the middle axis there.
Eigen::Matrix3d axis_cycle(int variant) {
  Eigen::Matrix3d c = Eigen::Matrix3d::Identity();
  if (variant == 1) {
    c.setZero();
    c(1, 0) = 1.0;  // new x = old y
    c(2, 1) = 1.0;  // new y = old z
    c(0, 2) = 1.0;  // new z = old x
  } else if (variant == 2) {
    c.setZero();
    c(2, 0) = 1.0;  // new x = old z
    c(0, 1) = 1.0;  // new y = old x
    c(1, 2) = 1.0;  // new z = old y
  }
  return c;
}

struct PcaStats {
  Pose frame;
  Vec3 half_extent;  // in the principal frame
};

PcaStats pca_stats(const PointCloud& cloud) {
  PcaStats st;
  st.frame = pca_frame(cloud);
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : cloud.points) {
    const Vec3 q = st.frame.to_local(p);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  st.half_extent = 0.5 * (hi - lo);
  return st;
}

InitGuess sq_init(const PcaStats& st, int variant) {
  const Eigen::Matrix3d cycle = axis_cycle(variant);
  InitGuess g;
  g.q = Eigen::Quaterniond(st.frame.rotation.toRotationMatrix() * cycle).normalized();
  const Vec3 ext = cycle.transpose() * st.half_extent;
  for (int i = 0; i < 3; ++i) g.a[i] = clamp_axis(std::abs(ext(i)));
  g.t = st.frame.translation;
  return g;
}

InitGuess sp_init(const PointCloud& cloud, const PcaStats& st, int variant) {
  // variant 0: +z on the minor principal axis (the default), 1 and 2 re-seat
  // it on the other two axes.
  const int zcol = (variant == 0) ? 2 : (variant == 1 ? 0 : 1);
  const Eigen::Matrix3d pca = st.frame.rotation.toRotationMatrix();
  Vec3 zaxis = pca.col(zcol);
  const Vec3 c = st.frame.translation;

  // Orient +z so the radial spread grows with height (bowl opens upward).
  double corr = 0.0, mean_s = 0.0, mean_r = 0.0;
  std::vector<double> ss(cloud.size()), rr(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.points[i] - c;
    ss[i] = d.dot(zaxis);
    rr[i] = (d - ss[i] * zaxis).norm();
    mean_s += ss[i];
    mean_r += rr[i];
  }
  mean_s /= static_cast<double>(cloud.size());
  mean_r /= static_cast<double>(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) corr += (ss[i] - mean_s) * (rr[i] - mean_r);
  if (corr < 0.0) zaxis = -zaxis;

  Vec3 xaxis = pca.col((zcol + 1) % 3);
  xaxis = (xaxis - xaxis.dot(zaxis) * zaxis).normalized();
  const Vec3 yaxis = zaxis.cross(xaxis);
  Eigen::Matrix3d rot;
  rot.col(0) = xaxis;
  rot.col(1) = yaxis;
  rot.col(2) = zaxis;

  std::vector<double> zs(cloud.size());
  double xmin = 1e30, xmax = -1e30, ymin = 1e30, ymax = -1e30;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 q = rot.transpose() * (cloud.points[i] - c);
    zs[i] = q.z();
    xmin = std::min(xmin, q.x());
    xmax = std::max(xmax, q.x());
    ymin = std::min(ymin, q.y());
    ymax = std::max(ymax, q.y());
  }
  const double z_bottom = percentile(zs, 1.0);
  const double z_top = percentile(zs, 99.0);

  InitGuess g;
  g.q = Eigen::Quaterniond(rot).normalized();
  g.t = c + z_bottom * zaxis;
  g.a[0] = clamp_axis(0.5 * (xmax - xmin));
  g.a[1] = clamp_axis(0.5 * (ymax - ymin));
  g.a[2] = clamp_axis(z_top - z_bottom);
  return g;
}

InitGuess perturb(const InitGuess& base, std::uint64_t seed, int restart) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
  InitGuess g = base;
  for (int i = 0; i < 3; ++i) g.a[i] = clamp_axis(base.a[i] * (1.0 + rng.uniform(-0.2, 0.2)));
  g.e1 = clamp_exp(base.e1 + rng.uniform(-0.3, 0.3));
  g.e2 = clamp_exp(base.e2 + rng.uniform(-0.3, 0.3));
  const Vec3 axis = rng.unit_vector();
  const double angle = rng.uniform(-deg2rad(10.0), deg2rad(10.0));
  g.q = (base.q * quat_exp(axis * angle)).normalized();
  return g;
}

// Parameter layout: a1 a2 a3 eps1 eps2 tx ty tz wx wy wz, rotation relative
// to the restart's base quaternion via the exponential map.
Eigen::VectorXd pack(const InitGuess& g) {
  Eigen::VectorXd x(11);
  x << g.a[0], g.a[1], g.a[2], g.e1, g.e2, g.t.x(), g.t.y(), g.t.z(), 0.0, 0.0, 0.0;
  return x;
}

void project_box(Eigen::VectorXd& x) {
  for (int i = 0; i < 3; ++i) x(i) = clamp_axis(x(i));
  x(3) = clamp_exp(x(3));
  x(4) = clamp_exp(x(4));
}

Pose unpack_pose(const Eigen::VectorXd& x, const Eigen::Quaterniond& q_base) {
  Pose p;
  p.rotation = (q_base * quat_exp(Vec3(x(8), x(9), x(10)))).normalized();
  p.translation = Vec3(x(5), x(6), x(7));
  return p;
}

enum class Shape { sq, sp };

lm::ResidualFn make_residual(const PointCloud& cloud, Eigen::Quaterniond q_base, Shape shape) {
  return [&cloud, q_base, shape](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    const Pose pose = unpack_pose(x, q_base);
    const Eigen::Matrix3d rt = pose.rotation.toRotationMatrix().transpose();
    const double a1 = x(0), a2 = x(1), a3 = x(2), e1 = x(3), e2 = x(4);
    const double vol = std::sqrt(a1 * a2 * a3);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3 q = rt * (cloud.points[i] - pose.translation);
      if (shape == Shape::sq) {
        const double f = sq_F_local(a1, a2, a3, e1, e2, q);
        r(static_cast<int>(i)) = vol * (std::pow(f, e1) - 1.0);
      } else {
        r(static_cast<int>(i)) = vol * sp_G_local(a1, a2, a3, e1, e2, q);
      }
    }
  };
}

FitResult run_fit(const PointCloud& cloud, int restarts, std::uint64_t seed, const FitConfig& cfg,
                  Shape shape) {
  if (cloud.size() < 10) throw FitError("fitting needs at least 10 points");
  restarts = std::max(restarts, 1);

  std::optional<InitGuess> override_init;
  if (shape == Shape::sq && cfg.init_sq) {
    const auto& m = *cfg.init_sq;
    InitGuess g;
    g.a[0] = m.a1;
    g.a[1] = m.a2;
    g.a[2] = m.a3;
    g.e1 = m.eps1;
    g.e2 = m.eps2;
    g.q = m.pose.rotation;
    g.t = m.pose.translation;
    override_init = g;
  } else if (shape == Shape::sp && cfg.init_sp) {
    const auto& m = *cfg.init_sp;
    InitGuess g;
    g.a[0] = m.a1;
    g.a[1] = m.a2;
    g.a[2] = m.a3;
    g.e1 = m.eps1;
    g.e2 = m.eps2;
    g.q = m.pose.rotation;
    g.t = m.pose.translation;
    override_init = g;
  }

  std::optional<PcaStats> st;
  if (!override_init) st = pca_stats(cloud);

  lm::Options opts;
  opts.lambda0 = cfg.lambda0;
  opts.max_iterations = cfg.max_iterations;
  opts.rel_tol = cfg.rel_tol;

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  Eigen::Quaterniond best_q = Eigen::Quaterniond::Identity();
  bool any_finite = false;

  for (int k = 0; k < restarts; ++k) {
    InitGuess init;
    if (override_init) {
      init = (k == 0) ? *override_init : perturb(*override_init, seed, k);
    } else {
      const int variant = k % 3;
      InitGuess base = (shape == Shape::sq) ? sq_init(*st, variant) : sp_init(cloud, *st, variant);
      init = (k < 3) ? base : perturb(base, seed, k);
    }
    const auto res = lm::minimize(make_residual(cloud, init.q, shape),
                                  static_cast<int>(cloud.size()), pack(init), opts, project_box);
    if (!std::isfinite(res.cost)) continue;
    any_finite = true;
    if (res.cost < best_cost) {
      best_cost = res.cost;
      best_x = res.x;
      best_q = init.q;
    }
  }
  if (!any_finite) throw FitError("fit failed: non-finite cost at every restart");

  FitResult out;
  out.restarts_used = restarts;
  out.seed = seed;
  const Pose pose = unpack_pose(best_x, best_q);
  const double a1 = best_x(0), a2 = best_x(1), a3 = best_x(2);
  const double e1 = best_x(3), e2 = best_x(4);
  double ss = 0.0;
  if (shape == Shape::sq) {
    Superquadric m{a1, a2, a3, e1, e2, pose};
    for (const auto& p : cloud.points) {
      const double v = std::pow(implicit_sq(m, p), e1) - 1.0;
      ss += v * v;
    }
    out.model = m;
  } else {
    Superparaboloid m{a1, a2, a3, e1, e2, pose};
    for (const auto& p : cloud.points) {
      const double v = implicit_sp(m, p);
      ss += v * v;
    }
    out.model = m;
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(cloud.size()));
  return out;
}

}  // namespace

FitResult fit_superquadric(const PointCloud& cloud, int restarts, std::uint64_t seed,
                           const FitConfig& cfg) {
  return run_fit(cloud, restarts, seed, cfg, Shape::sq);
}

FitResult fit_superparaboloid(const PointCloud& cloud, int restarts, std::uint64_t seed,
                              const FitConfig& cfg) {
  return run_fit(cloud, restarts, seed, cfg, Shape::sp);
}

}  // namespace tsk
