#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itdr/dataset.hpp"
#include "itdr/fusion.hpp"

namespace itdr {

/// A named placement move a scene entity can be sent to (relative to the
/// scene's home placement).
struct Candidate {
  std::string name;
  RigidTransform2 transform;
  Entity entity = Entity::Reference;
};

struct CandidatePool {
  std::vector<Candidate> candidates;

  void validate(const Scene& sample) const {
    if (candidates.empty()) throw std::invalid_argument("CandidatePool: empty pool");
    for (const Candidate& c : candidates) {
      if (c.entity != candidates.front().entity)
        throw std::invalid_argument("CandidatePool: candidates must share one entity");
      (void)apply_scene_transform(sample, c.transform, c.entity);
    }
  }
};

class TooManyFailuresError : public std::runtime_error {
 public:
  TooManyFailuresError(int failures, int total)
      : std::runtime_error("evaluation failed on " + std::to_string(failures) + " of " +
                           std::to_string(total) + " scenes (more than 10%)") {}
};

struct EvalOutcome {
  ErrorVector mean;
  int evaluated = 0;
  int failures = 0;
};

/// Mean fused error of one transform set over an evaluation scene list.
/// Degenerate fusions are excluded and counted; more than 10% of them is an
/// error. When `rebase` is set, every scene is first moved by it (used to
/// evaluate placement subsets that do not contain the home placement).
inline EvalOutcome evaluate_transform_set(const TransformSet& ts, const PoseEstimator& estimator,
                                          std::span<const Scene> scenes,
                                          const RandomizationConfig& rand_cfg, ParamsPolicy policy,
                                          std::uint64_t seed, int image_size = 64,
                                          const CaptureFn& capture_fn = {},
                                          const std::optional<TransformStep>& rebase = std::nullopt) {
  if (scenes.empty()) throw std::invalid_argument("evaluate_transform_set: no scenes");
  std::vector<std::optional<ErrorVector>> results(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    Scene scene = scenes[i];
    if (rebase) scene = apply_scene_transform(scene, rebase->transform, rebase->entity);
    const std::uint64_t trial_seed = derive_seed(seed, i);
    try {
      const FusionTrace trace =
          itdr_estimate(estimator, scene, ts, policy, rand_cfg, trial_seed, image_size, capture_fn);
      results[i] = pose_error(*trace.truth, trace.fused);
    } catch (const FusionDegenerateError&) {
      results[i] = std::nullopt;
    }
  });
  EvalOutcome out;
  std::vector<ErrorVector> ok;
  for (const auto& r : results) {
    if (r) ok.push_back(*r);
    else ++out.failures;
  }
  out.evaluated = static_cast<int>(ok.size());
  if (out.failures * 10 > static_cast<int>(scenes.size()) || out.evaluated == 0)
    throw TooManyFailuresError(out.failures, static_cast<int>(scenes.size()));
  out.mean = mean_error(ok);
  return out;
}

/// Collapses an error vector to one number for ranking. The error columns are
/// never combined by the tables themselves, so the orientation weight is a
/// config knob (meters per radian).
inline double scalarize_error(const ErrorVector& e, double etheta_weight) {
  double s = 0.0;
  if (e.ex) s += *e.ex;
  if (e.ey) s += *e.ey;
  if (e.etheta) s += etheta_weight * *e.etheta;
  return s;
}

inline constexpr double kDefaultEthetaWeight = 0.1;

struct SubsetResult {
  std::vector<int> indices;  // into the pool, ascending
  std::string name;          // candidate names joined with '+'
  ErrorVector mean;
  double scalar = 0.0;
  int rank = 0;
  int failures = 0;
};

struct SelectionReport {
  std::vector<SubsetResult> evaluated;  // canonical subset order
  int chosen = 0;                       // index into `evaluated`
  double etheta_weight = kDefaultEthetaWeight;

  const SubsetResult& chosen_subset() const { return evaluated[chosen]; }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("SelectionReport: cannot open '" + path.string() + "'");
    out << "subset,ex_m,ey_m,etheta_rad,scalar,rank\n";
    for (const SubsetResult& r : evaluated) {
      out << r.name << ',' << (r.mean.ex ? format_double(*r.mean.ex) : "") << ','
          << (r.mean.ey ? format_double(*r.mean.ey) : "") << ','
          << (r.mean.etheta ? format_double(*r.mean.etheta) : "") << ','
          << format_double(r.scalar) << ',' << r.rank << "\n";
    }
    if (!out) throw std::runtime_error("SelectionReport: write failed for '" + path.string() + "'");
  }
};

namespace selection_detail {

/// Builds the capture plan for a placement subset: the scene is rebased onto
/// the first placement, which becomes the identity element, and the remaining
/// placements are reached by relative moves.
inline std::pair<TransformStep, TransformSet> subset_plan(const CandidatePool& pool,
                                                          const std::vector<int>& indices) {
  const Candidate& base = pool.candidates[indices.front()];
  TransformStep rebase{base.transform, base.entity, base.name};
  std::vector<TransformStep> moves;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const Candidate& c = pool.candidates[indices[i]];
    moves.push_back({compose(c.transform, inverse(base.transform)), c.entity, c.name});
  }
  TransformSet ts = TransformSet::from_moves(std::move(moves));
  return {std::move(rebase), std::move(ts)};
}

inline std::string subset_name(const CandidatePool& pool, const std::vector<int>& indices) {
  std::string name;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) name += '+';
    name += pool.candidates[indices[i]].name;
  }
  return name;
}

inline SubsetResult evaluate_subset(const CandidatePool& pool, const std::vector<int>& indices,
                                    const PoseEstimator& estimator, std::span<const Scene> scenes,
                                    const RandomizationConfig& rand_cfg, ParamsPolicy policy,
                                    std::uint64_t seed, double etheta_weight, int image_size,
                                    const CaptureFn& capture_fn) {
  auto [rebase, ts] = subset_plan(pool, indices);
  const EvalOutcome outcome = evaluate_transform_set(ts, estimator, scenes, rand_cfg, policy, seed,
                                                     image_size, capture_fn, rebase);
  SubsetResult r;
  r.indices = indices;
  r.name = subset_name(pool, indices);
  r.mean = outcome.mean;
  r.scalar = scalarize_error(outcome.mean, etheta_weight);
  r.failures = outcome.failures;
  return r;
}

inline void assign_ranks_and_choice(SelectionReport& report) {
  std::vector<int> order(report.evaluated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.evaluated[a].scalar < report.evaluated[b].scalar;
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    report.evaluated[order[pos]].rank = static_cast<int>(pos) + 1;
  report.chosen = order.front();
}

inline std::uint64_t binomial_guarded(int n, int k, std::uint64_t cap) {
  std::uint64_t c = 1;
  for (int i = 0; i < k; ++i) {
    c = c * static_cast<std::uint64_t>(n - i) / static_cast<std::uint64_t>(i + 1);
    if (c > cap) return cap + 1;
  }
  return c;
}

}  // namespace selection_detail

inline constexpr std::uint64_t kExhaustiveSubsetCap = 10000;

/// Evaluates every size-`subset_size` subset of the pool and picks the one
/// with the smallest scalarized error. Ties go to the lexicographically first
/// subset. Subsets are reported in canonical (lexicographic) order.
inline SelectionReport exhaustive_select(const CandidatePool& pool, int subset_size,
                                         const PoseEstimator& estimator,
                                         std::span<const Scene> scenes,
                                         const RandomizationConfig& rand_cfg, ParamsPolicy policy,
                                         std::uint64_t seed,
                                         double etheta_weight = kDefaultEthetaWeight,
                                         int image_size = 64, const CaptureFn& capture_fn = {}) {
  const int n = static_cast<int>(pool.candidates.size());
  if (subset_size < 1 || subset_size > n)
    throw std::invalid_argument("exhaustive_select: subset_size out of range");
  if (selection_detail::binomial_guarded(n, subset_size, kExhaustiveSubsetCap) >
      kExhaustiveSubsetCap)
    throw std::invalid_argument(
        "exhaustive_select: more than 10000 subsets; use greedy_select instead");

  SelectionReport report;
  report.etheta_weight = etheta_weight;
  std::vector<int> indices(subset_size);
  for (int i = 0; i < subset_size; ++i) indices[i] = i;
  for (;;) {
    report.evaluated.push_back(selection_detail::evaluate_subset(
        pool, indices, estimator, scenes, rand_cfg, policy, seed, etheta_weight, image_size,
        capture_fn));
    // next lexicographic combination
    int i = subset_size - 1;
    while (i >= 0 && indices[i] == n - subset_size + i) --i;
    if (i < 0) break;
    ++indices[i];
    for (int j = i + 1; j < subset_size; ++j) indices[j] = indices[j - 1] + 1;
  }
  selection_detail::assign_ranks_and_choice(report);
  return report;
}

/// Grows the subset one placement at a time, each step keeping the candidate
/// that minimizes the evaluated error. Scales linearly in the pool size where
/// exhaustive enumeration cannot.
inline SelectionReport greedy_select(const CandidatePool& pool, int subset_size,
                                     const PoseEstimator& estimator, std::span<const Scene> scenes,
                                     const RandomizationConfig& rand_cfg, ParamsPolicy policy,
                                     std::uint64_t seed,
                                     double etheta_weight = kDefaultEthetaWeight,
                                     int image_size = 64, const CaptureFn& capture_fn = {}) {
  const int n = static_cast<int>(pool.candidates.size());
  if (subset_size < 1 || subset_size > n)
    throw std::invalid_argument("greedy_select: subset_size out of range");

  SelectionReport report;
  report.etheta_weight = etheta_weight;
  std::vector<int> chosen;
  for (int step = 0; step < subset_size; ++step) {
    int best_candidate = -1;
    double best_scalar = 0.0;
    for (int c = 0; c < n; ++c) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      std::vector<int> trial = chosen;
      trial.push_back(c);
      std::sort(trial.begin(), trial.end());
      SubsetResult r = selection_detail::evaluate_subset(pool, trial, estimator, scenes, rand_cfg,
                                                         policy, seed, etheta_weight, image_size,
                                                         capture_fn);
      const double scalar = r.scalar;
      report.evaluated.push_back(std::move(r));
      if (best_candidate < 0 || scalar < best_scalar) {
        best_candidate = c;
        best_scalar = scalar;
      }
    }
    chosen.push_back(best_candidate);
    std::sort(chosen.begin(), chosen.end());
  }
  // The chosen subset is the last step's winner; rank everything evaluated.
  selection_detail::assign_ranks_and_choice(report);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i = 0; i < report.evaluated.size(); ++i)
    if (report.evaluated[i].indices == chosen) report.chosen = static_cast<int>(i);
  return report;
}

/// The four-corner reference placement pool of the moving-reference study.
inline CandidatePool reference_corner_pool(const Scene& scene) {
  if (scene.scenario != Scenario::Reference)
    throw std::invalid_argument("reference_corner_pool: scene is not a reference scenario");
  CandidatePool pool;
  const auto& corners = reference_corner_poses();
  const Pose2 home = corners[scene.base_placement];
  for (std::size_t i = 0; i < corners.size(); ++i) {
    pool.candidates.push_back({"corner" + std::to_string(i), move_between(home, corners[i]),
                               Entity::Reference});
  }
  return pool;
}

}  // namespace itdr
