#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <vector>

namespace tsk {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// |x|^e, the building block of all superquadric terms.
inline double powabs(double x, double e) { return std::pow(std::abs(x), e); }

/// Rigid transform taking model/body coordinates to world coordinates.
struct Pose {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Vec3 to_local(const Vec3& p) const { return rotation.conjugate() * (p - translation); }
  Vec3 rotate_to_local(const Vec3& v) const { return rotation.conjugate() * v; }

  Pose compose(const Pose& rhs) const {
    Pose out;
    out.rotation = (rotation * rhs.rotation).normalized();
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }
};

/// Quaternion exponential of an axis-angle vector.
Eigen::Quaterniond quat_exp(const Vec3& w);

/// First-order body-twist integration: translation in the body frame,
/// rotation via the exponential map.
Pose advance(const Pose& pose, const Vec3& v_body, const Vec3& w_body, double dt);

/// Linear-interpolation percentile, p in [0, 100]. Throws on empty input.
double percentile(std::vector<double> values, double p);

/// Deterministic random stream. Uniforms come from mt19937_64 (fully
/// specified by the standard) and normals from a hand-rolled Box-Muller,
/// so identical seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 unit_vector() {
    Vec3 v(normal(), normal(), normal());
    const double n = v.norm();
    return n > 1e-12 ? Vec3(v / n) : Vec3(0.0, 0.0, 1.0);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with a stream index (splitmix-style increment).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
}

}  // namespace tsk
