#pragma once

#include "tsk/cloud.hpp"
#include "tsk/geometry.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace tsk {

inline constexpr double kMinSemiAxis = 1e-4;
inline constexpr double kMaxSemiAxis = 10.0;
inline constexpr double kMinExponent = 0.1;
inline constexpr double kMaxExponent = 2.0;

/// Solid bounded by the inside-outside function F = 1.
struct Superquadric {
  double a1 = 0.1, a2 = 0.1, a3 = 0.1;  // semi-axes [m]
  double eps1 = 1.0, eps2 = 1.0;        // shape exponents
  Pose pose;                            // model frame -> world
};

/// Bowl surface: bottom at the local origin, opening along +z, rim plane at
/// z = a3 where the cross-section superellipse has semi-axes (a1, a2).
struct Superparaboloid {
  double a1 = 0.1, a2 = 0.1, a3 = 0.05;
  double eps1 = 1.0, eps2 = 1.0;
  Pose pose;
};

/// Inside-outside value; F = 1 on the surface, F < 1 inside.
double implicit_sq(const Superquadric& m, const Vec3& p_world);

/// Signed surface value; G = 0 on the surface for local z in [0, a3].
double implicit_sp(const Superparaboloid& m, const Vec3& p_world);

/// Analytic spatial gradients. Partials of the absolute-value terms are
/// defined as 0 within 1e-12 of the coordinate planes (subgradient choice).
Vec3 grad_implicit(const Superquadric& m, const Vec3& p_world);
Vec3 grad_implicit(const Superparaboloid& m, const Vec3& p_world);

/// Uniform-grid surface sampling in the model's angular parameterization,
/// plus isotropic Gaussian noise. Deterministic given the seed.
PointCloud synth_cloud(const Superquadric& m, int n, double noise_sigma, std::uint64_t seed);
PointCloud synth_cloud(const Superparaboloid& m, int n, double noise_sigma, std::uint64_t seed);

/// n world-frame points on the rim superellipse at local z = a3,
/// theta_k = 2 pi k / n.
std::vector<Vec3> rim_superellipse(const Superparaboloid& m, int n);

/// Re-anchors the rim height at the 99th percentile of the cloud's
/// local-frame z (never below half the fitted height).
Superparaboloid refine_rim(const Superparaboloid& m, const PointCloud& cloud);

using ShapeModel = std::variant<Superquadric, Superparaboloid>;

struct FitResult {
  ShapeModel model;
  double rms_residual = 0.0;
  int restarts_used = 0;
  std::uint64_t seed = 0;
};

struct FitConfig {
  double lambda0 = 1e-3;
  int max_iterations = 200;
  double rel_tol = 1e-9;
  // Test hooks: explicit initializer for restart 0 (used by the rigid
  // equivariance checks).
  std::optional<Superquadric> init_sq;
  std::optional<Superparaboloid> init_sp;
};

/// Multi-start damped Gauss-Newton fit of the inside-outside residual
/// sqrt(a1 a2 a3) (F^eps1 - 1). Restart 0 starts from the principal frame;
/// later restarts re-seat the frame axes and perturb. Returns the restart
/// with the lowest cost (ties to the lowest index).
FitResult fit_superquadric(const PointCloud& cloud, int restarts, std::uint64_t seed,
                           const FitConfig& cfg = {});

/// Same scheme with residual sqrt(a1 a2 a3) G. The initial +z is the minor
/// principal axis, signed so the radius profile widens upward; the bottom
/// starts at the 1st percentile of local z.
FitResult fit_superparaboloid(const PointCloud& cloud, int restarts, std::uint64_t seed,
                              const FitConfig& cfg = {});

}  // namespace tsk
