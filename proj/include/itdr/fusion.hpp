#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "itdr/estimator.hpp"
#include "itdr/geometry.hpp"
#include "itdr/randomization.hpp"
#include "itdr/render.hpp"
#include "itdr/rng.hpp"
#include "itdr/scene.hpp"

namespace itdr {

struct TransformStep {
  RigidTransform2 transform;
  Entity entity = Entity::Target;
  std::string name;
};

/// Ordered transforms applied to the base scene; element 0 is always the
/// identity on the untouched scene, so a set with k moves yields k+1 captures.
class TransformSet {
 public:
  TransformSet() { steps_.push_back({RigidTransform2::identity(), Entity::Target, "base"}); }

  static TransformSet from_moves(std::vector<TransformStep> moves) {
    TransformSet ts;
    for (TransformStep& m : moves) ts.steps_.push_back(std::move(m));
    return ts;
  }

  const std::vector<TransformStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  std::size_t k() const { return steps_.size() - 1; }

  /// Applies every step to `scene`, surfacing constraint violations early.
  void validate_on(const Scene& scene) const {
    for (const TransformStep& s : steps_) (void)apply_scene_transform(scene, s.transform, s.entity);
  }

 private:
  std::vector<TransformStep> steps_;
};

enum class ParamsPolicy { Fixed, ResampledPerCapture };

inline std::string to_string(ParamsPolicy p) {
  return p == ParamsPolicy::Fixed ? "fixed" : "resampled";
}

inline ParamsPolicy params_policy_from_string(const std::string& s) {
  if (s == "fixed") return ParamsPolicy::Fixed;
  if (s == "resampled" || s == "resampled-per-capture") return ParamsPolicy::ResampledPerCapture;
  throw std::invalid_argument("unknown params policy '" + s + "' (expected fixed|resampled)");
}

/// Thrown when the inverse-mapped orientation estimates have no usable
/// circular mean; carries every per-capture estimate for diagnosis.
class FusionDegenerateError : public std::runtime_error {
 public:
  FusionDegenerateError(const std::string& what, std::vector<Pose2> mapped)
      : std::runtime_error(what), mapped_estimates(std::move(mapped)) {}
  std::vector<Pose2> mapped_estimates;
};

struct CaptureRecord {
  TransformStep step;
  std::uint64_t image_digest = 0;
  Pose2 raw;     // estimator output on the transformed scene
  Pose2 mapped;  // raw mapped back through the inverse frame change
};

struct FusionTrace {
  std::vector<CaptureRecord> captures;
  Pose2 fused;
  std::optional<Pose2> truth;
};

/// Replaceable image source: in simulation this renders; a robot deployment
/// substitutes real captures behind the same signature.
using CaptureFn = std::function<Image(const Scene& transformed_scene, const RandomizationParams&)>;

/// Applies one transform to the scene and renders it. Returns the transformed
/// scene alongside the image so callers can track the moved ground truth.
inline std::pair<Image, Scene> capture(const Scene& scene, const RigidTransform2& t, Entity entity,
                                       const RandomizationParams& params, int image_size = 64) {
  Scene moved = apply_scene_transform(scene, t, entity);
  Image img = render(moved, params, image_size);
  return {std::move(img), std::move(moved)};
}

/// The inverse-transform estimate: capture the scene under every transform in
/// `ts`, run the estimator on each image, map each prediction back through
/// the inverse of the induced label change, and average. Moving the grasped
/// pair or the camera leaves the label fixed, so those inverses are the
/// identity; reference moves invert the induced frame change.
inline FusionTrace itdr_estimate(const PoseEstimator& estimator, const Scene& scene,
                                 const TransformSet& ts, ParamsPolicy policy,
                                 const RandomizationConfig& rand_cfg, std::uint64_t seed,
                                 int image_size = 64, const CaptureFn& capture_fn = {}) {
  FusionTrace trace;
  trace.truth = scene_label(scene);
  std::vector<Pose2> mapped;
  mapped.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const TransformStep& step = ts.steps()[i];
    const Scene moved = apply_scene_transform(scene, step.transform, step.entity);
    const std::uint64_t params_index = policy == ParamsPolicy::Fixed ? 0 : i;
    const RandomizationParams params =
        sample_randomization(derive_seed(seed, 9000 + params_index), rand_cfg);
    const Image img =
        capture_fn ? capture_fn(moved, params) : render(moved, params, image_size);
    const Pose2 raw = estimator.predict(img, scene_label(moved), seed,
                                        static_cast<std::uint32_t>(i));
    const RigidTransform2 change = label_frame_change(scene, step.transform, step.entity);
    const Pose2 back = apply(inverse(change), raw);
    mapped.push_back(back);
    trace.captures.push_back({step, image_digest(img), raw, back});
  }
  try {
    trace.fused = pose_mean(mapped);
  } catch (const DegenerateOrientationError& e) {
    throw FusionDegenerateError(e.what(), std::move(mapped));
  }
  return trace;
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json to_json(const Pose2& p) {
  return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}, {"mask", p.mask.encode()}};
}

inline Pose2 pose_from_json(const nlohmann::json& j) {
  return Pose2(j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>(),
               PoseMask::decode(j.at("mask").get<std::string>()));
}

inline nlohmann::json to_json(const RigidTransform2& t) {
  return {{"rotation", t.rotation()}, {"dx", t.dx()}, {"dy", t.dy()}};
}

inline RigidTransform2 transform_from_json(const nlohmann::json& j) {
  return {j.at("rotation").get<double>(), j.at("dx").get<double>(), j.at("dy").get<double>()};
}

inline nlohmann::json to_json(const FusionTrace& trace) {
  nlohmann::json captures = nlohmann::json::array();
  for (const CaptureRecord& c : trace.captures) {
    captures.push_back({{"name", c.step.name},
                        {"entity", to_string(c.step.entity)},
                        {"transform", to_json(c.step.transform)},
                        {"image_digest", c.image_digest},
                        {"raw", to_json(c.raw)},
                        {"mapped", to_json(c.mapped)}});
  }
  nlohmann::json j = {{"captures", std::move(captures)}, {"fused", to_json(trace.fused)}};
  j["truth"] = trace.truth ? to_json(*trace.truth) : nlohmann::json();
  return j;
}

inline FusionTrace trace_from_json(const nlohmann::json& j) {
  FusionTrace trace;
  for (const nlohmann::json& c : j.at("captures")) {
    CaptureRecord rec;
    rec.step.name = c.at("name").get<std::string>();
    rec.step.entity = entity_from_string(c.at("entity").get<std::string>());
    rec.step.transform = transform_from_json(c.at("transform"));
    rec.image_digest = c.at("image_digest").get<std::uint64_t>();
    rec.raw = pose_from_json(c.at("raw"));
    rec.mapped = pose_from_json(c.at("mapped"));
    trace.captures.push_back(std::move(rec));
  }
  trace.fused = pose_from_json(j.at("fused"));
  if (j.contains("truth") && !j.at("truth").is_null()) trace.truth = pose_from_json(j.at("truth"));
  return trace;
}

}  // namespace itdr
