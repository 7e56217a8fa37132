#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itdr/dataset.hpp"
#include "itdr/model.hpp"
#include "itdr/rng.hpp"

namespace itdr {

struct TrainConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;          // epoch shuffling
  double weight_init_scale = 1.0;  // multiplies 1/sqrt(fan_in) at init

  void validate() const {
    if (learning_rate < 0.0) throw std::invalid_argument("train: learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (weight_init_scale <= 0.0) throw std::invalid_argument("train: weight_init_scale must be > 0");
  }
};

struct TrainLog {
  struct Row {
    int epoch = 0;
    double mean_loss = 0.0;
    long long wall_ms = 0;
  };
  std::vector<Row> rows;

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("TrainLog: cannot open '" + path.string() + "'");
    out << "epoch,mean_loss,wall_ms\n";
    for (const Row& r : rows)
      out << r.epoch << ',' << format_double(r.mean_loss) << ',' << r.wall_ms << "\n";
  }
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(int epoch, double learning_rate)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + " with learning rate " +
                           std::to_string(learning_rate)),
        epoch(epoch),
        learning_rate(learning_rate) {}
  int epoch;
  double learning_rate;
};

/// Minibatch SGD with momentum. Deterministic in (model, data, config): the
/// shuffle is seeded per epoch and the gradient reduction order is fixed.
inline std::pair<Model, TrainLog> train(Model model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.items.empty()) throw std::invalid_argument("train: empty dataset");
  const PoseMask mask = data.items.front().pose.mask;
  for (const DatasetItem& it : data.items)
    if (!(it.pose.mask == mask)) throw std::invalid_argument("train: dataset masks are not uniform");

  std::vector<Image> images(data.items.size());
  parallel_for(data.items.size(), [&](std::size_t i) { images[i] = data.load_image(data.items[i]); });

  const std::size_t n = data.items.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> velocity(model.config.param_count(), 0.0);
  model_detail::GradWorkspace workspace;
  TrainLog log;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(static_cast<int>(i + 1))]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      std::vector<TrainItem> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        batch.push_back({&images[order[i]], data.items[order[i]].pose});
      double batch_loss = 0.0;
      const std::vector<double> grad =
          loss_gradient(model, batch, &batch_loss, &workspace);
      if (!std::isfinite(batch_loss)) throw TrainingDivergedError(epoch, cfg.learning_rate);
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      for (std::size_t p = 0; p < velocity.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] - cfg.learning_rate * grad[p];
        model.params[p] += velocity[p];
      }
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    log.rows.push_back(
        {epoch, epoch_loss / static_cast<double>(n),
         std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()});
  }
  return {std::move(model), std::move(log)};
}

}  // namespace itdr
