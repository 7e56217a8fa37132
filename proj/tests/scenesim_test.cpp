#include <gtest/gtest.h>

#include <cmath>

#include "itdr/randomization.hpp"
#include "itdr/render.hpp"
#include "itdr/sample.hpp"
#include "itdr/scene.hpp"
#include "test_util.hpp"

namespace itdr {
namespace {

RandomizationConfig fixed_appearance() {
  // Zero-width ranges pin every nuisance parameter.
  RandomizationConfig cfg;
  cfg.table_color = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  cfg.target_color = {{0.2, 0.2}, {0.2, 0.2}, {0.2, 0.2}};
  cfg.reference_color = {{0.1, 0.1}, {0.8, 0.8}, {0.1, 0.1}};
  cfg.distractor_color = {{0.6, 0.6}, {0.6, 0.6}, {0.6, 0.6}};
  cfg.background_color = {{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
  cfg.texture_noise = {0.0, 0.0};
  cfg.ambient = {0.8, 0.8};
  cfg.directional_intensity = {0.2, 0.2};
  cfg.light_elevation = {1.0, 1.0};
  cfg.camera_eye_jitter = 0.0;
  cfg.camera_fov_jitter = 0.0;
  return cfg;
}

TEST(SampleScene, Deterministic) {
  for (Scenario s : {Scenario::Reference, Scenario::Gripper, Scenario::Camera}) {
    const Scene a = sample_scene(s, 41), b = sample_scene(s, 41);
    EXPECT_EQ(a.target.pose.x, b.target.pose.x);
    EXPECT_EQ(a.target.pose.theta, b.target.pose.theta);
    EXPECT_EQ(a.reference.pose.x, b.reference.pose.x);
    EXPECT_EQ(a.distractors.size(), b.distractors.size());
    EXPECT_EQ(a.base_placement, b.base_placement);
    const Scene c = sample_scene(s, 42);
    EXPECT_NE(a.target.pose.x, c.target.pose.x);
  }
}

TEST(SampleScene, FootprintsInsideTable10k) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const Scenario s = static_cast<Scenario>(rng.uniform_int(3));
    const Scene scene = sample_scene(s, derive_seed(99, i));
    EXPECT_TRUE(footprint_inside_table(scene, scene.target));
    EXPECT_TRUE(footprint_inside_table(scene, scene.reference));
    EXPECT_LE(scene.distractors.size(), 3u);
    for (const SceneObject& d : scene.distractors)
      EXPECT_TRUE(footprint_inside_table(scene, d));
  }
}

TEST(SampleScene, CameraScenarioScalesPeg) {
  const Scene small = sample_scene(Scenario::Camera, 5);
  const Scene normal = sample_scene(Scenario::Reference, 5);
  EXPECT_NEAR(small.target.shape.a, 0.343 * normal.target.shape.a, 1e-12);
  EXPECT_NEAR(small.target.shape.b, 0.343 * normal.target.shape.b, 1e-12);
  EXPECT_NEAR(small.target.shape.c, 0.343 * normal.target.shape.c, 1e-12);
}

TEST(SampleScene, GripperUsesTwoComponentMask) {
  const Scene s = sample_scene(Scenario::Gripper, 3);
  EXPECT_EQ(s.label_mask, PoseMask::x_theta());
  EXPECT_EQ(scene_label(s).mask, PoseMask::x_theta());
}

TEST(SampleScene, VisibilityFloorHolds) {
  for (int i = 0; i < 300; ++i) {
    const Scene s = sample_scene(Scenario::Reference, derive_seed(1234, i));
    if (!s.distractors.empty()) EXPECT_GE(target_visible_fraction(s), 0.3);
  }
}

TEST(SampleRandomization, DeterministicAndZeroWidth) {
  const RandomizationConfig cfg = fixed_appearance();
  const RandomizationParams a = sample_randomization(10, cfg);
  const RandomizationParams b = sample_randomization(10, cfg);
  EXPECT_EQ(a.ambient, b.ambient);
  EXPECT_EQ(a.pixel_noise_seed, b.pixel_noise_seed);
  EXPECT_DOUBLE_EQ(a.ambient, 0.8);
  EXPECT_DOUBLE_EQ(a.color[kSlotTarget].r, 0.2);
  EXPECT_DOUBLE_EQ(a.light_intensity, 0.2);
  EXPECT_DOUBLE_EQ(a.fov_scale, 1.0);
  EXPECT_DOUBLE_EQ(a.eye_offset.norm(), 0.0);
}

TEST(SampleRandomization, BoundsMonteCarlo10k) {
  const RandomizationConfig cfg;  // defaults
  double min_ambient = 1e9, max_ambient = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const RandomizationParams p = sample_randomization(derive_seed(5, i), cfg);
    for (int s = 0; s < kObjectSlots; ++s) {
      EXPECT_GE(p.noise_amplitude[s], cfg.texture_noise.lo);
      EXPECT_LE(p.noise_amplitude[s], cfg.texture_noise.hi);
      for (double v : {p.color[s].r, p.color[s].g, p.color[s].b}) {
        EXPECT_GE(v, 0.05);
        EXPECT_LE(v, 0.95);
      }
    }
    EXPECT_GE(p.ambient, cfg.ambient.lo);
    EXPECT_LE(p.ambient, cfg.ambient.hi);
    EXPECT_GE(p.light_intensity, cfg.directional_intensity.lo);
    EXPECT_LE(p.light_intensity, cfg.directional_intensity.hi);
    EXPECT_NEAR(p.light_direction.norm(), 1.0, 1e-12);
    EXPECT_LT(p.light_direction.z, 0.0);
    EXPECT_LE(p.eye_offset.norm(), cfg.camera_eye_jitter + 1e-12);
    EXPECT_GE(p.fov_scale, 1.0 - cfg.camera_fov_jitter);
    EXPECT_LE(p.fov_scale, 1.0 + cfg.camera_fov_jitter);
    min_ambient = std::min(min_ambient, p.ambient);
    max_ambient = std::max(max_ambient, p.ambient);
  }
  // the draws actually span the configured range
  EXPECT_LT(min_ambient, cfg.ambient.lo + 0.02);
  EXPECT_GT(max_ambient, cfg.ambient.hi - 0.02);
}

TEST(SampleRandomization, InvalidConfigRejected) {
  RandomizationConfig cfg;
  cfg.ambient = {0.9, 0.5};  // lo > hi
  EXPECT_THROW(sample_randomization(1, cfg), std::invalid_argument);
  RandomizationConfig cfg2;
  cfg2.texture_noise = {0.0, 0.9};  // above the hard bound
  EXPECT_THROW(sample_randomization(1, cfg2), std::invalid_argument);
  RandomizationConfig cfg3;
  cfg3.camera_eye_jitter = 0.5;  // above 5% of the scene diameter
  EXPECT_THROW(sample_randomization(1, cfg3), std::invalid_argument);
}

TEST(Render, DeterministicBitwise) {
  const Scene s = sample_scene(Scenario::Reference, 77);
  const RandomizationParams p = sample_randomization(78, RandomizationConfig{});
  const Image a = render(s, p);
  const Image b = render(s, p);
  EXPECT_EQ(a, b);
}

TEST(Render, SensitiveToTargetPose) {
  Scene s = sample_scene(Scenario::Reference, 80);
  s.distractors.clear();
  const RandomizationParams p = sample_randomization(81, fixed_appearance());
  const Image before = render(s, p);
  Scene moved = s;
  moved.target.pose = Pose2(s.target.pose.x + 0.08, s.target.pose.y, s.target.pose.theta + 1.0);
  const Image after = render(moved, p);
  EXPECT_NE(before, after);
}

TEST(Render, AmbientLuminanceMonotone) {
  Scene s = sample_scene(Scenario::Reference, 90);
  s.distractors.clear();
  RandomizationParams p = sample_randomization(91, fixed_appearance());
  p.ambient = 0.3;
  const Image dark = render(s, p);
  p.ambient = 1.0;
  const Image bright = render(s, p);
  long long sum_dark = 0, sum_bright = 0;
  for (std::uint8_t v : dark.pixels) sum_dark += v;
  for (std::uint8_t v : bright.pixels) sum_bright += v;
  EXPECT_GT(sum_bright, sum_dark);
}

TEST(Render, DegenerateCameraRejected) {
  Scene s = sample_scene(Scenario::Reference, 92);
  s.camera.look_at = s.camera.eye;
  const RandomizationParams p = sample_randomization(93, fixed_appearance());
  EXPECT_THROW(render(s, p), std::invalid_argument);
}

TEST(Render, ReferenceVisibleAtEveryCorner) {
  // Calibration guard: every corner placement must land on screen.
  Scene s = sample_scene(Scenario::Reference, 95);
  s.distractors.clear();
  for (const Pose2& corner : reference_corner_poses()) {
    s.reference.pose = corner;
    render_detail::RasterBuffers buf;
    RandomizationParams p = sample_randomization(96, fixed_appearance());
    render_detail::rasterize(s, p, 64, 64, true, false, buf);
    int ref_pixels = 0;
    for (int v : buf.slot)
      if (v == kSlotReference) ++ref_pixels;
    EXPECT_GE(ref_pixels, 4) << "corner (" << corner.x << ", " << corner.y << ")";
  }
}

TEST(Render, OcclusionSilhouetteHook) {
  // Camera close to table level looking along -x: a peg pointing away from
  // the camera (theta = pi) shows less silhouette than one broadside on.
  Scene s;
  s.scenario = Scenario::Reference;
  s.reference = {reference_cylinder_shape(), Pose2(0.2, 0.85, 0.0), 0.0};
  s.target = {peg_shape(), Pose2(0.5, 0.5, kPi), 0.0};
  s.camera.eye = {1.45, 0.5, 0.10};
  s.camera.look_at = {0.5, 0.5, 0.03};
  s.camera.vertical_fov = 0.5;
  const int away = target_pixel_count(s, 96);
  s.target.pose = Pose2(0.5, 0.5, kPi / 2);
  const int broadside = target_pixel_count(s, 96);
  EXPECT_GT(broadside, away);
  EXPECT_GT(away, 0);
}

TEST(ApplySceneTransform, IdentityKeepsSceneAndLabel) {
  const Scene s = sample_scene(Scenario::Reference, 100);
  for (Entity e : {Entity::Target, Entity::Reference, Entity::CameraOrbit}) {
    const Scene t = apply_scene_transform(s, RigidTransform2::identity(), e);
    const Pose2 a = scene_label(s), b = scene_label(t);
    EXPECT_DOUBLE_EQ(a.x, b.x);
    EXPECT_DOUBLE_EQ(a.y, b.y);
    EXPECT_DOUBLE_EQ(a.theta, b.theta);
  }
}

TEST(ApplySceneTransform, CameraOrbitKeepsLabel) {
  const Scene s = sample_scene(Scenario::Camera, 101);
  Rng rng(102);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform2 t =
        RigidTransform2::rotation_about(rng.uniform(-kPi, kPi), kTableCenterX, kTableCenterY);
    const Scene moved = apply_scene_transform(s, t, Entity::CameraOrbit);
    const Pose2 a = scene_label(s), b = scene_label(moved);
    EXPECT_DOUBLE_EQ(a.x, b.x);
    EXPECT_DOUBLE_EQ(a.theta, b.theta);
    EXPECT_NE(moved.camera.eye.x, s.camera.eye.x);
  }
}

TEST(ApplySceneTransform, PairMoveKeepsLabel) {
  const Scene s = sample_scene(Scenario::Gripper, 103);
  Rng rng(104);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform2 t(rng.uniform(-kPi, kPi), rng.uniform(-0.1, 0.1),
                            rng.uniform(-0.1, 0.1));
    Scene moved;
    try {
      moved = apply_scene_transform(s, t, Entity::Target);
    } catch (const SceneConstraintError&) {
      continue;
    }
    const Pose2 a = scene_label(s), b = scene_label(moved);
    EXPECT_NEAR(a.x, b.x, 1e-9);
    EXPECT_NEAR(a.y, b.y, 1e-9);
    EXPECT_NEAR(angular_distance(a.theta, b.theta), 0.0, 1e-9);
  }
}

TEST(ApplySceneTransform, ReferenceMoveMatchesWorldOracle) {
  // Independent world-coordinate recomputation of the relative pose.
  Scene s = sample_scene(Scenario::Reference, 105);
  const RigidTransform2 move(0.7, 0.2, -0.12);
  Scene moved;
  try {
    moved = apply_scene_transform(s, move, Entity::Reference);
  } catch (const SceneConstraintError&) {
    s.reference.pose = Pose2(0.3, 0.5, 0.2);
    moved = apply_scene_transform(s, move, Entity::Reference);
  }
  const Pose2 t = s.target.pose;
  const Pose2 r = moved.reference.pose;
  const double c = std::cos(r.theta), si = std::sin(r.theta);
  const double dx = t.x - r.x, dy = t.y - r.y;
  const Pose2 expected(c * dx + si * dy, -si * dx + c * dy, t.theta - r.theta);
  const Pose2 label = scene_label(moved);
  EXPECT_NEAR(label.x, expected.x, 1e-9);
  EXPECT_NEAR(label.y, expected.y, 1e-9);
  EXPECT_NEAR(angular_distance(label.theta, expected.theta), 0.0, 1e-9);
}

TEST(ApplySceneTransform, OutOfRegionRejected) {
  const Scene s = sample_scene(Scenario::Reference, 106);
  EXPECT_THROW(apply_scene_transform(s, RigidTransform2::from_translation(5.0, 0.0),
                                     Entity::Reference),
               SceneConstraintError);
  EXPECT_THROW(apply_scene_transform(s, RigidTransform2::from_translation(5.0, 0.0),
                                     Entity::Target),
               SceneConstraintError);
  EXPECT_THROW(apply_scene_transform(s, RigidTransform2::from_translation(50.0, 0.0),
                                     Entity::CameraOrbit),
               SceneConstraintError);
}

TEST(LabelFrameChange, ConsistentWithRecomputedLabels) {
  Rng rng(107);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    Scene s = sample_scene(Scenario::Reference, derive_seed(108, i));
    const RigidTransform2 t(rng.uniform(-kPi, kPi), rng.uniform(-0.4, 0.4),
                            rng.uniform(-0.4, 0.4));
    const Entity e = static_cast<Entity>(rng.uniform_int(3));
    Scene moved;
    try {
      moved = apply_scene_transform(s, t, e);
    } catch (const SceneConstraintError&) {
      continue;
    }
    ++checked;
    const Pose2 expected = apply(label_frame_change(s, t, e), scene_label(s));
    const Pose2 actual = scene_label(moved);
    EXPECT_NEAR(actual.x, expected.x, 1e-9);
    EXPECT_NEAR(actual.y, expected.y, 1e-9);
    EXPECT_NEAR(angular_distance(actual.theta, expected.theta), 0.0, 1e-9);
  }
  EXPECT_GT(checked, 300);
}

TEST(SceneLabel, GripperLabelIsGripperFrameOffset) {
  const Scene s = sample_scene(Scenario::Gripper, 110);
  const Pose2 label = scene_label(s);
  EXPECT_LE(std::abs(label.x), 0.05 + 1e-9);
  EXPECT_LE(std::abs(label.y), 0.015 + 1e-9);
}

}  // namespace
}  // namespace itdr
