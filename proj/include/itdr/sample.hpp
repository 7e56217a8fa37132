#pragma once

#include <cstdint>

#include "itdr/randomization.hpp"
#include "itdr/render.hpp"
#include "itdr/rng.hpp"
#include "itdr/scene.hpp"

namespace itdr {
namespace sample_detail {

// Any scene entity's footprint, as a circle for overlap rejection.
struct Disc {
  double x, y, r;
};

inline bool overlaps(const Disc& a, const Disc& b, double margin = 0.01) {
  return std::hypot(a.x - b.x, a.y - b.y) < a.r + b.r + margin;
}

inline ShapeSpec sample_distractor_shape(Rng& rng) {
  if (rng.uniform_int(2) == 0) {
    return ShapeSpec::prism(rng.uniform(0.03, 0.08), rng.uniform(0.03, 0.08),
                            rng.uniform(0.03, 0.08));
  }
  return ShapeSpec::cylinder(rng.uniform(0.015, 0.030), rng.uniform(0.03, 0.08));
}

inline void place_distractors(Scene& scene, Rng& rng) {
  const int count = rng.uniform_int(4);  // 0..3
  if (count == 0) return;
  std::vector<ShapeSpec> shapes;
  for (int i = 0; i < count; ++i) shapes.push_back(sample_distractor_shape(rng));

  const Disc target_disc{scene.target.pose.x, scene.target.pose.y,
                         scene.target.shape.footprint_radius()};
  const Disc reference_disc{scene.reference.pose.x, scene.reference.pose.y,
                            scene.reference.shape.footprint_radius()};

  // Re-place until the target keeps at least 30% of its silhouette visible;
  // the target pose itself is never resampled, so its distribution stays
  // exactly uniform.
  for (int attempt = 0; attempt < 25; ++attempt) {
    scene.distractors.clear();
    std::vector<Disc> placed;
    for (const ShapeSpec& shape : shapes) {
      const double r = shape.footprint_radius();
      for (int retry = 0; retry < 100; ++retry) {
        const Disc d{rng.uniform(0.10, 0.90), rng.uniform(0.10, 0.90), r};
        if (overlaps(d, target_disc) || overlaps(d, reference_disc)) continue;
        bool clear = true;
        for (const Disc& other : placed)
          if (overlaps(d, other)) { clear = false; break; }
        if (!clear) continue;
        placed.push_back(d);
        scene.distractors.push_back({shape, Pose2(d.x, d.y, rng.uniform(-kPi, kPi)), 0.0});
        break;
      }
    }
    if (target_visible_fraction(scene) >= 0.3) return;
  }
  scene.distractors.clear();  // distractors could not avoid the target
}

}  // namespace sample_detail

/// Orbits a camera about the table center by `angle` in the table plane.
inline CameraPose orbit_camera(const CameraPose& cam, double angle) {
  const RigidTransform2 t = RigidTransform2::rotation_about(angle, kTableCenterX, kTableCenterY);
  CameraPose out = cam;
  apply_point(t, out.eye.x, out.eye.y, &out.eye.x, &out.eye.y);
  apply_point(t, out.look_at.x, out.look_at.y, &out.look_at.x, &out.look_at.y);
  return out;
}

/// Draws a random scene for the given scenario. Deterministic in
/// (scenario, seed); the target pose is uniform over its placement region.
inline Scene sample_scene(Scenario scenario, std::uint64_t seed) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(scenario)));
  Scene scene;
  scene.scenario = scenario;

  switch (scenario) {
    case Scenario::Reference: {
      scene.base_placement = rng.uniform_int(4);
      scene.reference = {reference_cylinder_shape(), reference_corner_poses()[scene.base_placement],
                         0.0};
      scene.target = {peg_shape(),
                      Pose2(rng.uniform(kTargetRegionLo, kTargetRegionHi),
                            rng.uniform(kTargetRegionLo, kTargetRegionHi),
                            rng.uniform(-kPi, kPi)),
                      0.0};
      scene.label_mask = PoseMask::all();
      break;
    }
    case Scenario::Gripper: {
      scene.base_placement = rng.uniform_int(5);
      const Pose2 pair = gripper_positions()[scene.base_placement];
      scene.reference = {gripper_block_shape(), pair, 0.0};
      const Pose2 offset(rng.uniform(-0.05, 0.05), rng.uniform(-0.015, 0.015),
                         rng.uniform(-kPi, kPi));
      scene.target = {peg_shape(),
                      apply(RigidTransform2(pair.theta, pair.x, pair.y), offset),
                      kGripperBlockHeight};
      scene.label_mask = PoseMask::x_theta();
      break;
    }
    case Scenario::Camera: {
      scene.base_placement = rng.uniform_int(3);
      scene.camera =
          orbit_camera(default_camera(), camera_orbit_angles()[scene.base_placement]);
      scene.reference = {reference_cylinder_shape(), camera_scenario_reference_pose(), 0.0};
      scene.target.shape = peg_shape(kCameraScenarioPegScale);
      scene.target.base_z = 0.0;
      // Legal region excludes the fixed reference's neighborhood; rejection
      // keeps the draw uniform over what remains.
      const double clearance = scene.target.shape.footprint_radius() +
                               scene.reference.shape.footprint_radius() + 0.01;
      for (;;) {
        const Pose2 p(rng.uniform(kTargetRegionLo, kTargetRegionHi),
                      rng.uniform(kTargetRegionLo, kTargetRegionHi), rng.uniform(-kPi, kPi));
        if (std::hypot(p.x - scene.reference.pose.x, p.y - scene.reference.pose.y) >= clearance) {
          scene.target.pose = p;
          break;
        }
      }
      scene.label_mask = PoseMask::all();
      break;
    }
  }

  sample_detail::place_distractors(scene, rng);
  validate_scene(scene);
  return scene;
}

}  // namespace itdr
