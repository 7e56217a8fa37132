#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "itdr/fusion.hpp"
#include "itdr/sample.hpp"
#include "itdr/selection.hpp"

namespace itdr {

/// A scenario's experimental plan: the evaluated pose components and the
/// named multi-capture conditions reported next to the single-image baseline.
struct ScenarioSpec {
  Scenario tag = Scenario::Reference;
  PoseMask mask = PoseMask::all();
  std::vector<std::string> conditions;  // report row order; first is the baseline

  static ScenarioSpec preset(Scenario tag) {
    ScenarioSpec spec;
    spec.tag = tag;
    switch (tag) {
      case Scenario::Reference:
        spec.mask = PoseMask::all();
        spec.conditions = {"one_image", "diagonal", "parallel", "four_corners"};
        break;
      case Scenario::Gripper:
        spec.mask = PoseMask::x_theta();
        spec.conditions = {"one_image", "two_images", "five_images"};
        break;
      case Scenario::Camera:
        spec.mask = PoseMask::all();
        spec.conditions = {"one_image", "three_images"};
        break;
    }
    return spec;
  }
};

/// Builds the capture plan for one condition of one scene. Presets are
/// expressed relative to the scene's sampled base placement, so every
/// placement serves as home with equal probability.
inline TransformSet condition_transform_set(const ScenarioSpec& spec, const std::string& condition,
                                            const Scene& scene) {
  std::vector<TransformStep> moves;
  switch (spec.tag) {
    case Scenario::Reference: {
      const auto& corners = reference_corner_poses();
      const int base = scene.base_placement;
      auto corner_move = [&](int j) {
        return TransformStep{move_between(corners[base], corners[j]), Entity::Reference,
                             "corner" + std::to_string(j)};
      };
      if (condition == "one_image") {
      } else if (condition == "diagonal") {
        moves.push_back(corner_move((base + 2) % 4));
      } else if (condition == "parallel") {
        moves.push_back(corner_move((base + 1) % 4));
      } else if (condition == "four_corners") {
        for (int d = 1; d < 4; ++d) moves.push_back(corner_move((base + d) % 4));
      } else {
        throw std::invalid_argument("unknown reference condition '" + condition + "'");
      }
      break;
    }
    case Scenario::Gripper: {
      const auto& positions = gripper_positions();
      const int base = scene.base_placement;
      auto position_move = [&](int j) {
        return TransformStep{move_between(positions[base], positions[j]), Entity::Target,
                             "position" + std::to_string(j)};
      };
      if (condition == "one_image") {
      } else if (condition == "two_images") {
        moves.push_back(position_move((base + 1) % 5));
      } else if (condition == "five_images") {
        for (int d = 1; d < 5; ++d) moves.push_back(position_move((base + d) % 5));
      } else {
        throw std::invalid_argument("unknown gripper condition '" + condition + "'");
      }
      break;
    }
    case Scenario::Camera: {
      const auto& angles = camera_orbit_angles();
      const int base = scene.base_placement;
      auto orbit_move = [&](int j) {
        return TransformStep{
            RigidTransform2::rotation_about(angles[j] - angles[base], kTableCenterX, kTableCenterY),
            Entity::CameraOrbit, "viewpoint" + std::to_string(j)};
      };
      if (condition == "one_image") {
      } else if (condition == "three_images") {
        for (int d = 1; d < 3; ++d) moves.push_back(orbit_move((base + d) % 3));
      } else {
        throw std::invalid_argument("unknown camera condition '" + condition + "'");
      }
      break;
    }
  }
  return TransformSet::from_moves(std::move(moves));
}

struct HarnessConfig {
  int n_scenes = 500;
  ParamsPolicy policy = ParamsPolicy::ResampledPerCapture;
  RandomizationConfig randomization;
  int image_size = 64;
  std::uint64_t seed = 0;
};

struct ReportRow {
  std::string condition;
  int n = 0;
  ErrorVector mean;
  std::uint64_t seed = 0;
};

struct ReportTable {
  std::vector<ReportRow> rows;

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ReportTable: cannot open '" + path.string() + "'");
    out << "condition,n,ex_m,ey_m,etheta_rad,seed\n";
    for (const ReportRow& r : rows) {
      out << r.condition << ',' << r.n << ',' << (r.mean.ex ? format_double(*r.mean.ex) : "")
          << ',' << (r.mean.ey ? format_double(*r.mean.ey) : "") << ','
          << (r.mean.etheta ? format_double(*r.mean.etheta) : "") << ',' << r.seed << "\n";
    }
    if (!out) throw std::runtime_error("ReportTable: write failed for '" + path.string() + "'");
  }
};

namespace harness_detail {

inline std::vector<Scene> evaluation_scenes(Scenario tag, std::uint64_t seed, int n) {
  std::vector<Scene> scenes(n);
  parallel_for(static_cast<std::size_t>(n),
               [&](std::size_t i) { scenes[i] = sample_scene(tag, derive_seed(seed, 500000 + i)); });
  return scenes;
}

inline std::uint64_t trial_seed(std::uint64_t run_seed, std::size_t scene_index) {
  // Shared across conditions so their common captures use identical draws.
  return derive_seed(run_seed, 900000 + scene_index);
}

}  // namespace harness_detail

/// Runs every condition of a scenario over a fresh evaluation scene set and
/// reports mean errors per condition. When `out_dir` is non-empty, writes
/// report.csv plus one JSON document per successful estimate under
/// traces/<condition>.jsonl. Fully deterministic in (spec, config).
inline ReportTable run_scenario(const ScenarioSpec& spec, const PoseEstimator& estimator,
                                const HarnessConfig& cfg,
                                const std::filesystem::path& out_dir = {}) {
  if (cfg.n_scenes < 1) throw std::invalid_argument("run_scenario: n_scenes must be >= 1");
  const std::vector<Scene> scenes =
      harness_detail::evaluation_scenes(spec.tag, cfg.seed, cfg.n_scenes);
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir / "traces");

  ReportTable table;
  for (const std::string& condition : spec.conditions) {
    std::vector<std::optional<FusionTrace>> traces(scenes.size());
    parallel_for(scenes.size(), [&](std::size_t i) {
      const TransformSet ts = condition_transform_set(spec, condition, scenes[i]);
      try {
        traces[i] = itdr_estimate(estimator, scenes[i], ts, cfg.policy, cfg.randomization,
                                  harness_detail::trial_seed(cfg.seed, i), cfg.image_size);
      } catch (const FusionDegenerateError&) {
        traces[i] = std::nullopt;
      }
    });
    std::vector<ErrorVector> errors;
    errors.reserve(scenes.size());
    std::ofstream trace_out;
    if (write) {
      trace_out.open(out_dir / "traces" / (condition + ".jsonl"), std::ios::binary);
      if (!trace_out)
        throw std::runtime_error("run_scenario: cannot write traces for '" + condition + "'");
    }
    for (const auto& t : traces) {
      if (!t) continue;
      errors.push_back(pose_error(*t->truth, t->fused));
      if (write) trace_out << to_json(*t).dump() << "\n";
    }
    table.rows.push_back({condition, static_cast<int>(errors.size()), mean_error(errors), cfg.seed});
  }
  if (write) table.write_csv(out_dir / "report.csv");
  return table;
}

/// Reads back a traces/<condition>.jsonl file.
inline std::vector<FusionTrace> read_traces_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_traces_jsonl: cannot open '" + path.string() + "'");
  std::vector<FusionTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    traces.push_back(trace_from_json(nlohmann::json::parse(line)));
  }
  return traces;
}

struct OrientationRow {
  std::string condition;
  int bin = 0;
  double theta_lo = 0, theta_hi = 0;
  int n = 0;
  ErrorVector mean;
};

struct OrientationTable {
  int bins = 0;
  std::uint64_t seed = 0;
  std::vector<OrientationRow> rows;

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("OrientationTable: cannot open '" + path.string() + "'");
    out << "condition,bin_index,theta_lo,theta_hi,n,ex_m,ey_m,etheta_rad,seed\n";
    for (const OrientationRow& r : rows) {
      out << r.condition << ',' << r.bin << ',' << format_double(r.theta_lo) << ','
          << format_double(r.theta_hi) << ',' << r.n << ','
          << (r.mean.ex ? format_double(*r.mean.ex) : "") << ','
          << (r.mean.ey ? format_double(*r.mean.ey) : "") << ','
          << (r.mean.etheta ? format_double(*r.mean.etheta) : "") << ',' << seed << "\n";
    }
    if (!out) throw std::runtime_error("OrientationTable: write failed for '" + path.string() + "'");
  }
};

/// Buckets evaluation scenes by true orientation and reports per-bin mean
/// errors for the single-image baseline and the scenario's full multi-capture
/// condition. Bins with no scenes are emitted with n = 0 and blank means.
inline OrientationTable error_vs_orientation(const ScenarioSpec& spec,
                                             const PoseEstimator& estimator,
                                             const HarnessConfig& cfg, int bins) {
  if (bins < 4) throw std::invalid_argument("error_vs_orientation: bins must be >= 4");
  if (!spec.mask.theta)
    throw std::invalid_argument("error_vs_orientation: scenario does not evaluate theta");
  const std::vector<Scene> scenes =
      harness_detail::evaluation_scenes(spec.tag, cfg.seed, cfg.n_scenes);
  const std::vector<std::string> conditions = {spec.conditions.front(), spec.conditions.back()};

  OrientationTable table;
  table.bins = bins;
  table.seed = cfg.seed;
  const double bin_width = kTwoPi / bins;
  for (const std::string& condition : conditions) {
    std::vector<std::optional<FusionTrace>> traces(scenes.size());
    parallel_for(scenes.size(), [&](std::size_t i) {
      const TransformSet ts = condition_transform_set(spec, condition, scenes[i]);
      try {
        traces[i] = itdr_estimate(estimator, scenes[i], ts, cfg.policy, cfg.randomization,
                                  harness_detail::trial_seed(cfg.seed, i), cfg.image_size);
      } catch (const FusionDegenerateError&) {
        traces[i] = std::nullopt;
      }
    });
    std::vector<std::vector<ErrorVector>> binned(bins);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      if (!traces[i]) continue;
      const double theta = scene_label(scenes[i]).theta;
      int b = static_cast<int>((theta + kPi) / bin_width);
      if (b >= bins) b = bins - 1;  // theta == pi lands in the last bin
      if (b < 0) b = 0;
      binned[b].push_back(pose_error(*traces[i]->truth, traces[i]->fused));
    }
    for (int b = 0; b < bins; ++b) {
      OrientationRow row;
      row.condition = condition;
      row.bin = b;
      row.theta_lo = -kPi + b * bin_width;
      row.theta_hi = -kPi + (b + 1) * bin_width;
      row.n = static_cast<int>(binned[b].size());
      if (row.n > 0) row.mean = mean_error(binned[b]);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace itdr
