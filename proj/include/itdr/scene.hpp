#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "itdr/geometry.hpp"

namespace itdr {

enum class Scenario { Reference, Gripper, Camera };
enum class Entity { Target, Reference, CameraOrbit };
// Peg is a rectangular prism with a small end nub; the nub breaks the 180
// degree symmetry so orientation is identifiable from images at all.
enum class ShapeKind { Prism, Cylinder, Peg };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Reference: return "reference";
    case Scenario::Gripper: return "gripper";
    case Scenario::Camera: return "camera";
  }
  throw std::invalid_argument("to_string: bad Scenario");
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "reference") return Scenario::Reference;
  if (s == "gripper") return Scenario::Gripper;
  if (s == "camera") return Scenario::Camera;
  throw std::invalid_argument("unknown scenario '" + s + "' (expected reference|gripper|camera)");
}

inline std::string to_string(Entity e) {
  switch (e) {
    case Entity::Target: return "target";
    case Entity::Reference: return "reference";
    case Entity::CameraOrbit: return "camera_orbit";
  }
  throw std::invalid_argument("to_string: bad Entity");
}

inline Entity entity_from_string(const std::string& s) {
  if (s == "target") return Entity::Target;
  if (s == "reference") return Entity::Reference;
  if (s == "camera_orbit") return Entity::CameraOrbit;
  throw std::invalid_argument("unknown entity '" + s + "'");
}

struct Vec3 {
  double x = 0, y = 0, z = 0;
  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 normalized(Vec3 v) {
  const double n = v.norm();
  if (n == 0) throw std::invalid_argument("normalized: zero vector");
  return {v.x / n, v.y / n, v.z / n};
}

/// Solid primitive footprinted on the table plane. Prism dimensions are the
/// full extents along the object's local x/y/z axes; a cylinder's axis is
/// vertical.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Prism;
  double a = 0, b = 0, c = 0;  // prism/peg: lx, ly, lz; cylinder: radius, height

  static ShapeSpec prism(double lx, double ly, double lz) {
    return {ShapeKind::Prism, lx, ly, lz};
  }
  static ShapeSpec peg(double lx, double ly, double lz) { return {ShapeKind::Peg, lx, ly, lz}; }
  static ShapeSpec cylinder(double radius, double height) {
    return {ShapeKind::Cylinder, radius, height, 0.0};
  }

  /// Radius of the smallest circle containing the footprint.
  double footprint_radius() const {
    return kind == ShapeKind::Cylinder ? a : 0.5 * std::hypot(a, b);
  }
  double height() const { return kind == ShapeKind::Cylinder ? b : c; }
};

struct SceneObject {
  ShapeSpec shape;
  Pose2 pose;          // on the table plane, world frame
  double base_z = 0.0; // height of the object's bottom above the table top
};

struct CameraPose {
  Vec3 eye;
  Vec3 look_at;
  Vec3 up{0, 0, 1};
  double vertical_fov = 0.72;  // radians

  void validate() const {
    if ((look_at - eye).norm() < 1e-9)
      throw std::invalid_argument("CameraPose: eye coincides with look_at");
    if (cross(look_at - eye, up).norm() < 1e-9)
      throw std::invalid_argument("CameraPose: up parallel to view direction");
    if (!(vertical_fov > 0.0 && vertical_fov < kPi))
      throw std::invalid_argument("CameraPose: fov out of (0, pi)");
  }
};

// ---------------------------------------------------------------------------
// Scenario geometry constants. The paper gives no dimensions; these keep all
// objects visually resolvable at the default 64x64 render.
// ---------------------------------------------------------------------------

inline constexpr double kTableX = 1.0;
inline constexpr double kTableY = 1.0;
inline constexpr double kPegLength = 0.12;
inline constexpr double kPegWidth = 0.04;
inline constexpr double kPegHeight = 0.04;
inline constexpr double kReferenceRadius = 0.04;
inline constexpr double kReferenceHeight = 0.10;
inline constexpr double kGripperBlockSide = 0.06;
inline constexpr double kGripperBlockHeight = 0.05;
// Linear scale of the moving-camera scenario's peg relative to the default.
inline constexpr double kCameraScenarioPegScale = 0.343;
// Target placement region (uniform sampling stays exact: the margin already
// clears the table edge and every corner placement).
inline constexpr double kTargetRegionLo = 0.18;
inline constexpr double kTargetRegionHi = 0.82;

inline ShapeSpec peg_shape(double scale = 1.0) {
  return ShapeSpec::peg(scale * kPegLength, scale * kPegWidth, scale * kPegHeight);
}
inline ShapeSpec reference_cylinder_shape() {
  return ShapeSpec::cylinder(kReferenceRadius, kReferenceHeight);
}
inline ShapeSpec gripper_block_shape() {
  return ShapeSpec::prism(kGripperBlockSide, kGripperBlockSide, kGripperBlockHeight);
}

inline CameraPose default_camera() {
  CameraPose cam;
  cam.eye = {0.5, -1.1, 1.2};
  cam.look_at = {0.5, 0.45, 0.0};
  cam.up = {0, 0, 1};
  cam.vertical_fov = 0.72;
  return cam;
}

/// The four table-corner placements the reference object moves between.
inline const std::array<Pose2, 4>& reference_corner_poses() {
  static const std::array<Pose2, 4> corners = {
      Pose2(0.07, 0.07, 0.0), Pose2(0.93, 0.07, 0.0),
      Pose2(0.93, 0.93, 0.0), Pose2(0.07, 0.93, 0.0)};
  return corners;
}

/// The five fixed positions the gripper (block + grasped peg) moves between.
inline const std::array<Pose2, 5>& gripper_positions() {
  static const std::array<Pose2, 5> positions = {
      Pose2(0.30, 0.35, 0.0), Pose2(0.70, 0.35, -0.6),
      Pose2(0.50, 0.58, 1.1), Pose2(0.32, 0.70, 2.4), Pose2(0.68, 0.70, -2.0)};
  return positions;
}

/// Azimuths (about the table center) of the three fixed camera viewpoints.
inline const std::array<double, 3>& camera_orbit_angles() {
  static const std::array<double, 3> angles = {0.0, 2.0 * kPi / 3.0, -2.0 * kPi / 3.0};
  return angles;
}

inline constexpr double kTableCenterX = 0.5;
inline constexpr double kTableCenterY = 0.5;

/// Fixed reference placement for the moving-camera scenario.
inline Pose2 camera_scenario_reference_pose() { return Pose2(0.20, 0.24, 0.0); }

/// Synthetic tabletop scene. The ground-truth label is never stored; it is
/// recomputed from world poses on demand, so transform bookkeeping cannot
/// drift out of sync with the geometry.
struct Scene {
  Scenario scenario = Scenario::Reference;
  SceneObject target;
  SceneObject reference;
  std::vector<SceneObject> distractors;  // at most 3
  double table_x = kTableX;
  double table_y = kTableY;
  CameraPose camera = default_camera();
  PoseMask label_mask = PoseMask::all();
  // Index of the sampled base placement (corner / gripper position / camera
  // viewpoint); presets build per-scene transform sets relative to it.
  int base_placement = 0;
};

/// Ground truth: pose of the target expressed in the reference object's frame.
inline Pose2 scene_label(const Scene& s) {
  const RigidTransform2 world_to_ref =
      inverse(RigidTransform2(s.reference.pose.theta, s.reference.pose.x, s.reference.pose.y));
  Pose2 label = apply(world_to_ref, Pose2(s.target.pose.x, s.target.pose.y, s.target.pose.theta));
  label.mask = s.label_mask;
  return label;
}

class SceneConstraintError : public std::runtime_error {
 public:
  explicit SceneConstraintError(const std::string& what) : std::runtime_error(what) {}
};

inline bool footprint_inside_table(const Scene& s, const SceneObject& obj) {
  const double r = obj.shape.footprint_radius();
  return obj.pose.x - r >= 0.0 && obj.pose.x + r <= s.table_x &&
         obj.pose.y - r >= 0.0 && obj.pose.y + r <= s.table_y;
}

inline void validate_scene(const Scene& s) {
  if (!footprint_inside_table(s, s.target))
    throw SceneConstraintError("scene: target footprint leaves the table");
  if (!footprint_inside_table(s, s.reference))
    throw SceneConstraintError("scene: reference footprint leaves the table");
  if (s.distractors.size() > 3)
    throw SceneConstraintError("scene: more than 3 distractors");
  s.camera.validate();
}

/// Applies an SE(2) move to one scene entity and returns the new scene.
///
///   Target      - the grasped pair (target + reference) moves rigidly, the
///                 camera stays put; the label is unchanged.
///   Reference   - only the reference moves; the label changes by the induced
///                 frame change (see label_frame_change).
///   CameraOrbit - the camera's eye and look-at move in the table plane; the
///                 label is unchanged.
inline Scene apply_scene_transform(const Scene& s, const RigidTransform2& t, Entity entity) {
  Scene out = s;
  switch (entity) {
    case Entity::Target:
      out.target.pose = apply(t, out.target.pose);
      out.reference.pose = apply(t, out.reference.pose);
      if (!footprint_inside_table(out, out.target) || !footprint_inside_table(out, out.reference))
        throw SceneConstraintError("apply_scene_transform: moved pair leaves the table");
      break;
    case Entity::Reference:
      out.reference.pose = apply(t, out.reference.pose);
      if (!footprint_inside_table(out, out.reference))
        throw SceneConstraintError("apply_scene_transform: reference leaves the table");
      break;
    case Entity::CameraOrbit: {
      apply_point(t, out.camera.eye.x, out.camera.eye.y, &out.camera.eye.x, &out.camera.eye.y);
      apply_point(t, out.camera.look_at.x, out.camera.look_at.y, &out.camera.look_at.x,
                  &out.camera.look_at.y);
      // Keep the table in view: the camera must stay above the table plane,
      // at standoff, aimed at the table's neighborhood.
      if (out.camera.eye.z < 0.2 || (out.camera.look_at - out.camera.eye).norm() < 0.2 ||
          out.camera.look_at.x < -0.2 || out.camera.look_at.x > out.table_x + 0.2 ||
          out.camera.look_at.y < -0.2 || out.camera.look_at.y > out.table_y + 0.2)
        throw SceneConstraintError("apply_scene_transform: camera orbit loses the table");
      break;
    }
  }
  return out;
}

/// The transform L induced on the ground-truth label by moving `entity` with
/// world transform `t`: label(apply_scene_transform(s, t, e)) == apply(L, label(s)).
/// Moving the grasped pair or the camera leaves the label fixed, so L is the
/// identity; moving the reference conjugates t into the reference frame.
inline RigidTransform2 label_frame_change(const Scene& s, const RigidTransform2& t, Entity entity) {
  if (entity != Entity::Reference) return RigidTransform2::identity();
  const RigidTransform2 ref(s.reference.pose.theta, s.reference.pose.x, s.reference.pose.y);
  return compose(inverse(ref), compose(inverse(t), ref));
}

}  // namespace itdr
