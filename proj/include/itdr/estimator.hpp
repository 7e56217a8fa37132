#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "itdr/dataset.hpp"
#include "itdr/geometry.hpp"
#include "itdr/image.hpp"
#include "itdr/model.hpp"
#include "itdr/oracle.hpp"
#include "itdr/rng.hpp"

namespace itdr {

/// Anything that maps an image to a pose. Trained models use only the image;
/// the ground-truth label and the (trial, capture) identifiers exist so that
/// synthetic oracles can be driven through the same interface with
/// reproducible draws. Implementations must be pure: safe to share across
/// threads, deterministic in their arguments.
class PoseEstimator {
 public:
  virtual ~PoseEstimator() = default;
  virtual Pose2 predict(const Image& image, const Pose2& truth_label, std::uint64_t trial_seed,
                        std::uint32_t capture_index) const = 0;
};

class ModelEstimator : public PoseEstimator {
 public:
  explicit ModelEstimator(Model model, PoseMask mask = PoseMask::all())
      : model_(std::move(model)), mask_(mask) {}

  Pose2 predict(const Image& image, const Pose2&, std::uint64_t, std::uint32_t) const override {
    return forward(model_, image, mask_);
  }

  const Model& model() const { return model_; }

 private:
  Model model_;
  PoseMask mask_;
};

class OracleEstimator : public PoseEstimator {
 public:
  explicit OracleEstimator(NoiseOracle oracle) : oracle_(oracle) { oracle_.validate(); }

  Pose2 predict(const Image&, const Pose2& truth_label, std::uint64_t trial_seed,
                std::uint32_t capture_index) const override {
    return oracle_predict(oracle_, truth_label, derive_seed(trial_seed, capture_index));
  }

  const NoiseOracle& oracle() const { return oracle_; }

 private:
  NoiseOracle oracle_;
};

struct EvalRecord {
  int index = 0;
  Pose2 truth;
  Pose2 prediction;
  ErrorVector error;
};

struct ErrorReport {
  ErrorVector mean;
  std::vector<EvalRecord> records;
  int n = 0;
};

/// Per-item single-image evaluation over a dataset.
inline ErrorReport evaluate(const PoseEstimator& estimator, const Dataset& data) {
  if (data.items.empty()) throw std::invalid_argument("evaluate: empty dataset");
  ErrorReport report;
  report.records.resize(data.items.size());
  parallel_for(data.items.size(), [&](std::size_t i) {
    const DatasetItem& item = data.items[i];
    const Image img = data.load_image(item);
    const Pose2 pred = estimator.predict(img, item.pose, item.seed, 0);
    report.records[i] = {item.index, item.pose, pred, pose_error(item.pose, pred)};
  });
  std::vector<ErrorVector> errors;
  errors.reserve(report.records.size());
  for (const EvalRecord& r : report.records) errors.push_back(r.error);
  report.mean = mean_error(errors);
  report.n = static_cast<int>(report.records.size());
  return report;
}

}  // namespace itdr
