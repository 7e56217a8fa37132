#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace itdr {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Thrown when a set of orientation estimates has no usable average
/// (near-zero resultant, e.g. antipodal pairs).
class DegenerateOrientationError : public std::runtime_error {
 public:
  explicit DegenerateOrientationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Wraps an angle to the half-open interval (-pi, pi]; -pi maps to +pi.
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("wrap_angle: non-finite angle");
  double w = std::fmod(theta, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  if (w > kPi) w -= kTwoPi;
  return w;
}

/// Signed smallest arc from b to a, in [-pi, pi].
inline double signed_angle_diff(double a, double b) {
  return std::remainder(a - b, kTwoPi);
}

/// Angular distance in [0, pi].
inline double angular_distance(double a, double b) {
  return std::abs(signed_angle_diff(a, b));
}

/// Flags marking which pose components are part of the estimated quantity.
/// The gripper scenario evaluates a 2-component pose (x and theta), so masks
/// flow through every averaging and error-reporting path.
struct PoseMask {
  bool x = true;
  bool y = true;
  bool theta = true;

  friend bool operator==(const PoseMask&, const PoseMask&) = default;

  bool any() const { return x || y || theta; }

  /// Three characters over {0,1} for (x, y, theta), e.g. "101".
  std::string encode() const {
    std::string s(3, '0');
    s[0] = x ? '1' : '0';
    s[1] = y ? '1' : '0';
    s[2] = theta ? '1' : '0';
    return s;
  }

  static PoseMask decode(const std::string& s) {
    if (s.size() != 3 || s.find_first_not_of("01") != std::string::npos)
      throw std::invalid_argument("PoseMask::decode: expected three characters over {0,1}, got '" + s + "'");
    PoseMask m{s[0] == '1', s[1] == '1', s[2] == '1'};
    if (!m.any()) throw std::invalid_argument("PoseMask::decode: at least one component must be evaluated");
    return m;
  }

  static PoseMask all() { return {true, true, true}; }
  /// The gripper scenario's 2-component pose: x offset and orientation.
  static PoseMask x_theta() { return {true, false, true}; }
};

/// Planar pose (x, y, theta) of the target in the reference frame.
/// theta is always stored wrapped to (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  PoseMask mask = PoseMask::all();

  Pose2() = default;
  Pose2(double x_, double y_, double theta_, PoseMask mask_ = PoseMask::all())
      : x(x_), y(y_), theta(wrap_angle(theta_)), mask(mask_) {
    if (!mask.any()) throw std::invalid_argument("Pose2: mask must evaluate at least one component");
  }
};

/// An element of SE(2): rotate by `rotation`, then translate by (dx, dy).
class RigidTransform2 {
 public:
  RigidTransform2() = default;
  RigidTransform2(double rotation, double dx, double dy)
      : rotation_(wrap_angle(rotation)), dx_(dx), dy_(dy) {}

  static RigidTransform2 identity() { return {}; }
  static RigidTransform2 from_rotation(double angle) { return {angle, 0.0, 0.0}; }
  static RigidTransform2 from_translation(double dx, double dy) { return {0.0, dx, dy}; }

  /// Rotation by `angle` about the point (cx, cy) rather than the origin.
  static RigidTransform2 rotation_about(double angle, double cx, double cy) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {angle, cx - (c * cx - s * cy), cy - (s * cx + c * cy)};
  }

  double rotation() const { return rotation_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }

 private:
  double rotation_ = 0.0;
  double dx_ = 0.0;
  double dy_ = 0.0;
};

/// Composition: apply `b` first, then `a`.
inline RigidTransform2 compose(const RigidTransform2& a, const RigidTransform2& b) {
  const double c = std::cos(a.rotation()), s = std::sin(a.rotation());
  return {a.rotation() + b.rotation(),
          c * b.dx() - s * b.dy() + a.dx(),
          s * b.dx() + c * b.dy() + a.dy()};
}

inline RigidTransform2 inverse(const RigidTransform2& t) {
  const double c = std::cos(t.rotation()), s = std::sin(t.rotation());
  // R^-1 * (-translation)
  return {-t.rotation(), -(c * t.dx() + s * t.dy()), -(-s * t.dx() + c * t.dy())};
}

/// Applies the transform to a pose: position is rotated and translated,
/// orientation incremented by the transform's rotation. Mask is preserved.
inline Pose2 apply(const RigidTransform2& t, const Pose2& p) {
  const double c = std::cos(t.rotation()), s = std::sin(t.rotation());
  return Pose2(c * p.x - s * p.y + t.dx(),
               s * p.x + c * p.y + t.dy(),
               p.theta + t.rotation(), p.mask);
}

/// Transforms a bare point.
inline void apply_point(const RigidTransform2& t, double x, double y, double* ox, double* oy) {
  const double c = std::cos(t.rotation()), s = std::sin(t.rotation());
  *ox = c * x - s * y + t.dx();
  *oy = s * x + c * y + t.dy();
}

/// The transform that maps pose `from` onto pose `to` in the world frame:
/// apply(move_between(a, b), a) == b.
inline RigidTransform2 move_between(const Pose2& from, const Pose2& to) {
  const double rot = to.theta - from.theta;
  const double c = std::cos(rot), s = std::sin(rot);
  return {rot, to.x - (c * from.x - s * from.y), to.y - (s * from.x + c * from.y)};
}

/// Average of a set of angles under wrap-around: the exact minimizer of the
/// summed squared angular distance. Stationary points of that objective are
/// the arithmetic mean shifted by 2*pi*k/n, so scanning those n candidates
/// finds the global minimum; near-ties are broken toward the resultant
/// direction atan2(mean sin, mean cos).
inline double circular_mean(std::span<const double> angles) {
  const std::size_t n = angles.size();
  if (n == 0) throw std::invalid_argument("circular_mean: empty input");
  double sum = 0.0, s = 0.0, c = 0.0;
  for (double a : angles) {
    if (!std::isfinite(a)) throw std::invalid_argument("circular_mean: non-finite angle");
    sum += a;
    s += std::sin(a);
    c += std::cos(a);
  }
  const double resultant = std::hypot(s, c) / static_cast<double>(n);
  if (resultant <= 1e-9)
    throw DegenerateOrientationError(
        "circular_mean: orientation estimates contradictory (resultant length " +
        std::to_string(resultant) + ")");
  const double resultant_dir = std::atan2(s, c);

  const double base = sum / static_cast<double>(n);
  auto objective = [&](double x) {
    double total = 0.0;
    for (double a : angles) {
      const double d = signed_angle_diff(a, x);
      total += d * d;
    }
    return total;
  };
  double best = base, best_obj = objective(base);
  double best_res_dist = angular_distance(base, resultant_dir);
  for (std::size_t k = 1; k < n; ++k) {
    const double cand = base + kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    const double obj = objective(cand);
    const double res_dist = angular_distance(cand, resultant_dir);
    if (obj < best_obj - 1e-12 ||
        (obj <= best_obj + 1e-12 && res_dist < best_res_dist)) {
      best = cand;
      best_obj = obj;
      best_res_dist = res_dist;
    }
  }
  return wrap_angle(best);
}

inline double circular_mean(const std::vector<double>& angles) {
  return circular_mean(std::span<const double>(angles));
}

/// Sample average of poses: arithmetic mean in x and y, circular mean in
/// theta. All masks must be identical.
inline Pose2 pose_mean(std::span<const Pose2> poses) {
  if (poses.empty()) throw std::invalid_argument("pose_mean: empty input");
  const PoseMask mask = poses.front().mask;
  double sx = 0.0, sy = 0.0;
  std::vector<double> thetas;
  thetas.reserve(poses.size());
  for (const Pose2& p : poses) {
    if (!(p.mask == mask)) throw std::invalid_argument("pose_mean: mixed masks");
    sx += p.x;
    sy += p.y;
    thetas.push_back(p.theta);
  }
  const double n = static_cast<double>(poses.size());
  return Pose2(sx / n, sy / n, circular_mean(thetas), mask);
}

inline Pose2 pose_mean(const std::vector<Pose2>& poses) {
  return pose_mean(std::span<const Pose2>(poses));
}

/// Per-component absolute errors; components outside the evaluated mask are
/// absent. etheta is the angular distance, in [0, pi].
struct ErrorVector {
  std::optional<double> ex;
  std::optional<double> ey;
  std::optional<double> etheta;
};

inline ErrorVector pose_error(const Pose2& truth, const Pose2& est) {
  if (!(truth.mask == est.mask)) throw std::invalid_argument("pose_error: mask mismatch");
  ErrorVector e;
  if (truth.mask.x) e.ex = std::abs(truth.x - est.x);
  if (truth.mask.y) e.ey = std::abs(truth.y - est.y);
  if (truth.mask.theta) e.etheta = angular_distance(truth.theta, est.theta);
  return e;
}

/// Component-wise mean over the present components of each error.
inline ErrorVector mean_error(std::span<const ErrorVector> errors) {
  ErrorVector out;
  double sx = 0, sy = 0, st = 0;
  std::size_t nx = 0, ny = 0, nt = 0;
  for (const ErrorVector& e : errors) {
    if (e.ex) { sx += *e.ex; ++nx; }
    if (e.ey) { sy += *e.ey; ++ny; }
    if (e.etheta) { st += *e.etheta; ++nt; }
  }
  if (nx) out.ex = sx / static_cast<double>(nx);
  if (ny) out.ey = sy / static_cast<double>(ny);
  if (nt) out.etheta = st / static_cast<double>(nt);
  return out;
}

}  // namespace itdr
