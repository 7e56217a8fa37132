#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "itdr/rng.hpp"
#include "itdr/scene.hpp"

namespace itdr {

// Object color/noise slots used by the renderer and the sampler.
inline constexpr int kSlotTable = 0;
inline constexpr int kSlotTarget = 1;
inline constexpr int kSlotReference = 2;
inline constexpr int kSlotDistractor0 = 3;
inline constexpr int kObjectSlots = 6;

struct Rgb {
  double r = 0, g = 0, b = 0;
};

struct Range {
  double lo = 0, hi = 0;

  void validate(const std::string& name, double bound_lo, double bound_hi) const {
    if (!(lo <= hi))
      throw std::invalid_argument("randomization: " + name + " has lo > hi");
    if (lo < bound_lo || hi > bound_hi)
      throw std::invalid_argument("randomization: " + name + " outside [" +
                                  std::to_string(bound_lo) + ", " + std::to_string(bound_hi) + "]");
  }
};

struct ColorRange {
  Range r{0.05, 0.95}, g{0.05, 0.95}, b{0.05, 0.95};

  void validate(const std::string& name) const {
    r.validate(name + ".r", 0.0, 1.0);
    g.validate(name + ".g", 0.0, 1.0);
    b.validate(name + ".b", 0.0, 1.0);
  }
};

// Hard bounds on the sampled quantities (the config may narrow them, never
// widen them).
inline constexpr double kMaxTextureNoise = 0.5;
inline constexpr double kMinAmbient = 0.3;
inline constexpr double kMaxDirectional = 0.7;
// 5% of the scene diameter (sqrt(2) m table diagonal).
inline constexpr double kMaxEyeJitter = 0.0707;
inline constexpr double kMaxFovJitter = 0.10;

/// Ranges the nuisance appearance parameters are drawn from. Defaults follow
/// the usual domain-randomization recipe; the reference object keeps a
/// green-dominant band so the known reference stays identifiable, matching
/// the physical green cylinder it stands in for.
struct RandomizationConfig {
  ColorRange table_color;
  ColorRange target_color;
  ColorRange reference_color{{0.05, 0.30}, {0.50, 0.95}, {0.05, 0.30}};
  ColorRange distractor_color;
  ColorRange background_color;
  Range texture_noise{0.0, 0.25};
  Range ambient{0.4, 1.0};
  Range directional_intensity{0.0, 0.7};
  Range light_elevation{0.5, 1.35};  // radians above the horizon
  double camera_eye_jitter = 0.02;   // meters, radius of the perturbation ball
  double camera_fov_jitter = 0.04;   // max fractional fov change

  void validate() const {
    table_color.validate("table_color");
    target_color.validate("target_color");
    reference_color.validate("reference_color");
    distractor_color.validate("distractor_color");
    background_color.validate("background_color");
    texture_noise.validate("texture_noise", 0.0, kMaxTextureNoise);
    ambient.validate("ambient", kMinAmbient, 1.0);
    directional_intensity.validate("directional_intensity", 0.0, kMaxDirectional);
    light_elevation.validate("light_elevation", 0.05, 0.5 * kPi);
    if (camera_eye_jitter < 0.0 || camera_eye_jitter > kMaxEyeJitter)
      throw std::invalid_argument("randomization: camera_eye_jitter outside [0, " +
                                  std::to_string(kMaxEyeJitter) + "]");
    if (camera_fov_jitter < 0.0 || camera_fov_jitter > kMaxFovJitter)
      throw std::invalid_argument("randomization: camera_fov_jitter outside [0, " +
                                  std::to_string(kMaxFovJitter) + "]");
  }
};

/// One concrete draw of every nuisance parameter; fully determined by
/// (seed, config).
struct RandomizationParams {
  std::array<Rgb, kObjectSlots> color{};
  std::array<double, kObjectSlots> noise_amplitude{};
  Rgb background;
  double ambient = 1.0;
  Vec3 light_direction{0, 0, -1};  // travel direction, unit length
  double light_intensity = 0.0;
  Vec3 eye_offset{0, 0, 0};
  double fov_scale = 1.0;
  std::uint64_t pixel_noise_seed = 0;
};

inline RandomizationParams sample_randomization(std::uint64_t seed,
                                                const RandomizationConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  auto draw_color = [&rng](const ColorRange& c) {
    return Rgb{rng.uniform(c.r.lo, c.r.hi), rng.uniform(c.g.lo, c.g.hi),
               rng.uniform(c.b.lo, c.b.hi)};
  };
  RandomizationParams p;
  p.color[kSlotTable] = draw_color(cfg.table_color);
  p.color[kSlotTarget] = draw_color(cfg.target_color);
  p.color[kSlotReference] = draw_color(cfg.reference_color);
  for (int i = kSlotDistractor0; i < kObjectSlots; ++i)
    p.color[i] = draw_color(cfg.distractor_color);
  for (int i = 0; i < kObjectSlots; ++i)
    p.noise_amplitude[i] = rng.uniform(cfg.texture_noise.lo, cfg.texture_noise.hi);
  p.background = draw_color(cfg.background_color);
  p.ambient = rng.uniform(cfg.ambient.lo, cfg.ambient.hi);
  const double azimuth = rng.uniform(0.0, kTwoPi);
  const double elevation = rng.uniform(cfg.light_elevation.lo, cfg.light_elevation.hi);
  p.light_direction = {-std::cos(elevation) * std::cos(azimuth),
                       -std::cos(elevation) * std::sin(azimuth), -std::sin(elevation)};
  p.light_intensity = rng.uniform(cfg.directional_intensity.lo, cfg.directional_intensity.hi);
  // Uniform draw in the unit ball, scaled to the jitter radius.
  Vec3 v;
  do {
    v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  } while (v.norm() > 1.0);
  p.eye_offset = cfg.camera_eye_jitter * v;
  p.fov_scale = 1.0 + rng.uniform(-cfg.camera_fov_jitter, cfg.camera_fov_jitter);
  p.pixel_noise_seed = rng.next_u64();
  return p;
}

// --- JSON (partial documents overlay the defaults) -------------------------

inline void from_json_into(const nlohmann::json& j, Range& r) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("randomization: range must be a [lo, hi] array");
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

inline void from_json_into(const nlohmann::json& j, ColorRange& c) {
  if (j.contains("r")) from_json_into(j.at("r"), c.r);
  if (j.contains("g")) from_json_into(j.at("g"), c.g);
  if (j.contains("b")) from_json_into(j.at("b"), c.b);
}

inline nlohmann::json to_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

inline nlohmann::json to_json(const ColorRange& c) {
  return {{"r", to_json(c.r)}, {"g", to_json(c.g)}, {"b", to_json(c.b)}};
}

inline void from_json_into(const nlohmann::json& j, RandomizationConfig& cfg) {
  if (j.contains("table_color")) from_json_into(j.at("table_color"), cfg.table_color);
  if (j.contains("target_color")) from_json_into(j.at("target_color"), cfg.target_color);
  if (j.contains("reference_color")) from_json_into(j.at("reference_color"), cfg.reference_color);
  if (j.contains("distractor_color")) from_json_into(j.at("distractor_color"), cfg.distractor_color);
  if (j.contains("background_color")) from_json_into(j.at("background_color"), cfg.background_color);
  if (j.contains("texture_noise")) from_json_into(j.at("texture_noise"), cfg.texture_noise);
  if (j.contains("ambient")) from_json_into(j.at("ambient"), cfg.ambient);
  if (j.contains("directional_intensity"))
    from_json_into(j.at("directional_intensity"), cfg.directional_intensity);
  if (j.contains("light_elevation")) from_json_into(j.at("light_elevation"), cfg.light_elevation);
  if (j.contains("camera_eye_jitter")) cfg.camera_eye_jitter = j.at("camera_eye_jitter").get<double>();
  if (j.contains("camera_fov_jitter")) cfg.camera_fov_jitter = j.at("camera_fov_jitter").get<double>();
  cfg.validate();
}

inline nlohmann::json to_json(const RandomizationConfig& cfg) {
  return {{"table_color", to_json(cfg.table_color)},
          {"target_color", to_json(cfg.target_color)},
          {"reference_color", to_json(cfg.reference_color)},
          {"distractor_color", to_json(cfg.distractor_color)},
          {"background_color", to_json(cfg.background_color)},
          {"texture_noise", to_json(cfg.texture_noise)},
          {"ambient", to_json(cfg.ambient)},
          {"directional_intensity", to_json(cfg.directional_intensity)},
          {"light_elevation", to_json(cfg.light_elevation)},
          {"camera_eye_jitter", cfg.camera_eye_jitter},
          {"camera_fov_jitter", cfg.camera_fov_jitter}};
}

}  // namespace itdr
