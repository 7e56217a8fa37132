#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <vector>

#include "itdr/geometry.hpp"
#include "itdr/image.hpp"
#include "itdr/rng.hpp"

namespace itdr {

/// Convolutional pose regressor: [conv 3x3 -> maxpool 2x2 -> relu] per block,
/// then two fully connected layers down to (x, y, theta_raw). Every tensor
/// lives in one flat parameter vector addressed through layer offsets.
struct ModelConfig {
  int input_size = 64;                     // square RGB input
  std::vector<int> conv_channels = {8, 8, 8};
  int fc_hidden = 128;
  static constexpr int kOutputs = 3;

  int blocks() const { return static_cast<int>(conv_channels.size()); }

  /// Spatial side length entering block b (b == blocks() gives the final map).
  int spatial(int b) const { return input_size >> b; }

  int channels_in(int b) const { return b == 0 ? 3 : conv_channels[b - 1]; }

  int flat_size() const { return conv_channels.back() * spatial(blocks()) * spatial(blocks()); }

  void validate() const {
    if (conv_channels.empty()) throw std::invalid_argument("model: need at least one conv block");
    for (int c : conv_channels)
      if (c < 1) throw std::invalid_argument("model: conv channels must be positive");
    if (fc_hidden < 1) throw std::invalid_argument("model: fc_hidden must be positive");
    if (input_size < (1 << blocks()) || input_size % (1 << blocks()) != 0)
      throw std::invalid_argument("model: input_size must be a positive multiple of 2^blocks");
  }

  // Parameter layout: per block [conv W, conv b], then fc1 W, fc1 b, fc2 W, fc2 b.
  int conv_weight_offset(int b) const {
    int off = 0;
    for (int i = 0; i < b; ++i) off += conv_channels[i] * channels_in(i) * 9 + conv_channels[i];
    return off;
  }
  int conv_bias_offset(int b) const {
    return conv_weight_offset(b) + conv_channels[b] * channels_in(b) * 9;
  }
  int fc1_weight_offset() const { return conv_weight_offset(blocks()); }
  int fc1_bias_offset() const { return fc1_weight_offset() + fc_hidden * flat_size(); }
  int fc2_weight_offset() const { return fc1_bias_offset() + fc_hidden; }
  int fc2_bias_offset() const { return fc2_weight_offset() + kOutputs * fc_hidden; }
  int param_count() const { return fc2_bias_offset() + kOutputs; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Model {
  ModelConfig config;
  std::vector<double> params;
  std::uint64_t init_seed = 0;

  /// Uniform init in [-s, s] with s = scale / sqrt(fan_in), biases included.
  static Model init(const ModelConfig& cfg, std::uint64_t seed, double scale = 1.0) {
    cfg.validate();
    Model m;
    m.config = cfg;
    m.init_seed = seed;
    m.params.assign(cfg.param_count(), 0.0);
    Rng rng(seed);
    auto fill = [&](int offset, int count, int fan_in) {
      const double s = scale / std::sqrt(static_cast<double>(fan_in));
      for (int i = 0; i < count; ++i) m.params[offset + i] = rng.uniform(-s, s);
    };
    for (int b = 0; b < cfg.blocks(); ++b) {
      const int fan_in = cfg.channels_in(b) * 9;
      fill(cfg.conv_weight_offset(b), cfg.conv_channels[b] * cfg.channels_in(b) * 9, fan_in);
      fill(cfg.conv_bias_offset(b), cfg.conv_channels[b], fan_in);
    }
    fill(cfg.fc1_weight_offset(), cfg.fc_hidden * cfg.flat_size(), cfg.flat_size());
    fill(cfg.fc1_bias_offset(), cfg.fc_hidden, cfg.flat_size());
    fill(cfg.fc2_weight_offset(), ModelConfig::kOutputs * cfg.fc_hidden, cfg.fc_hidden);
    fill(cfg.fc2_bias_offset(), ModelConfig::kOutputs, cfg.fc_hidden);
    return m;
  }
};

namespace model_detail {

/// Reusable per-evaluation buffers (intermediate activations kept for the
/// backward pass).
struct Activations {
  std::vector<double> input;                    // 3 * S * S, normalized
  std::vector<std::vector<double>> conv_out;    // per block, C * s * s (pre-pool)
  std::vector<std::vector<int>> pool_argmax;    // per block, C * (s/2)^2
  std::vector<std::vector<double>> block_out;   // per block, C * (s/2)^2 (post-relu)
  std::vector<double> fc1_pre, fc1_out;
  std::array<double, 3> out{};
};

inline void normalize_input(const Image& img, int size, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(3) * size * size);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const std::uint8_t* px = img.at(x, y);
      const std::size_t i = static_cast<std::size_t>(y) * size + x;
      out[0 * plane + i] = px[0] / 255.0 - 0.5;
      out[1 * plane + i] = px[1] / 255.0 - 0.5;
      out[2 * plane + i] = px[2] / 255.0 - 0.5;
    }
  }
}

/// 3x3 convolution with zero padding, planar layout.
inline void conv3x3(const double* in, int c_in, int s, const double* weights, const double* bias,
                    int c_out, double* out) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (int o = 0; o < c_out; ++o) {
    double* op = out + o * plane;
    for (std::size_t i = 0; i < plane; ++i) op[i] = bias[o];
    for (int c = 0; c < c_in; ++c) {
      const double* ip = in + c * plane;
      const double* w = weights + (o * c_in + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w[ky * 3 + kx];
          const int dy = ky - 1, dx = kx - 1;
          const int y_lo = std::max(0, -dy), y_hi = std::min(s, s - dy);
          const int x_lo = std::max(0, -dx), x_hi = std::min(s, s - dx);
          for (int y = y_lo; y < y_hi; ++y) {
            double* orow = op + static_cast<std::size_t>(y) * s;
            const double* irow = ip + static_cast<std::size_t>(y + dy) * s + dx;
            for (int x = x_lo; x < x_hi; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

inline void conv3x3_backward(const double* in, int c_in, int s, const double* weights, int c_out,
                             const double* d_out, double* d_weights, double* d_bias,
                             double* d_in /* may be null */) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (int o = 0; o < c_out; ++o) {
    const double* dop = d_out + o * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += dop[i];
    d_bias[o] += acc;
    for (int c = 0; c < c_in; ++c) {
      const double* ip = in + c * plane;
      double* dip = d_in ? d_in + c * plane : nullptr;
      double* dw = d_weights + (o * c_in + c) * 9;
      const double* w = weights + (o * c_in + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1, dx = kx - 1;
          const int y_lo = std::max(0, -dy), y_hi = std::min(s, s - dy);
          const int x_lo = std::max(0, -dx), x_hi = std::min(s, s - dx);
          double wgrad = 0.0;
          const double wv = w[ky * 3 + kx];
          for (int y = y_lo; y < y_hi; ++y) {
            const double* drow = dop + static_cast<std::size_t>(y) * s;
            const double* irow = ip + static_cast<std::size_t>(y + dy) * s + dx;
            for (int x = x_lo; x < x_hi; ++x) wgrad += drow[x] * irow[x];
            if (dip) {
              double* dirow = dip + static_cast<std::size_t>(y + dy) * s + dx;
              for (int x = x_lo; x < x_hi; ++x) dirow[x] += wv * drow[x];
            }
          }
          dw[ky * 3 + kx] += wgrad;
        }
      }
    }
  }
}

/// 2x2 max pool (stride 2) followed by relu, with argmax bookkeeping.
inline void pool_relu(const double* in, int channels, int s, double* out, int* argmax) {
  const int h = s / 2;
  const std::size_t in_plane = static_cast<std::size_t>(s) * s;
  const std::size_t out_plane = static_cast<std::size_t>(h) * h;
  for (int c = 0; c < channels; ++c) {
    const double* ip = in + c * in_plane;
    double* op = out + c * out_plane;
    int* ap = argmax + c * out_plane;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < h; ++x) {
        const int base = (2 * y) * s + 2 * x;
        int best = base;
        double v = ip[base];
        if (ip[base + 1] > v) { v = ip[base + 1]; best = base + 1; }
        if (ip[base + s] > v) { v = ip[base + s]; best = base + s; }
        if (ip[base + s + 1] > v) { v = ip[base + s + 1]; best = base + s + 1; }
        const std::size_t oi = static_cast<std::size_t>(y) * h + x;
        ap[oi] = static_cast<int>(c * in_plane) + best;
        op[oi] = v > 0.0 ? v : 0.0;
      }
    }
  }
}

inline void forward_raw(const Model& m, const Image& img, Activations& acts) {
  const ModelConfig& cfg = m.config;
  if (img.width != cfg.input_size || img.height != cfg.input_size)
    throw std::invalid_argument("forward: image size " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " does not match model input " +
                                std::to_string(cfg.input_size));
  normalize_input(img, cfg.input_size, acts.input);
  const int blocks = cfg.blocks();
  acts.conv_out.resize(blocks);
  acts.pool_argmax.resize(blocks);
  acts.block_out.resize(blocks);
  const double* in = acts.input.data();
  for (int b = 0; b < blocks; ++b) {
    const int s = cfg.spatial(b);
    const int c_in = cfg.channels_in(b), c_out = cfg.conv_channels[b];
    acts.conv_out[b].resize(static_cast<std::size_t>(c_out) * s * s);
    acts.pool_argmax[b].resize(static_cast<std::size_t>(c_out) * (s / 2) * (s / 2));
    acts.block_out[b].resize(static_cast<std::size_t>(c_out) * (s / 2) * (s / 2));
    conv3x3(in, c_in, s, m.params.data() + cfg.conv_weight_offset(b),
            m.params.data() + cfg.conv_bias_offset(b), c_out, acts.conv_out[b].data());
    pool_relu(acts.conv_out[b].data(), c_out, s, acts.block_out[b].data(),
              acts.pool_argmax[b].data());
    in = acts.block_out[b].data();
  }
  const int flat = cfg.flat_size();
  acts.fc1_pre.resize(cfg.fc_hidden);
  acts.fc1_out.resize(cfg.fc_hidden);
  const double* w1 = m.params.data() + cfg.fc1_weight_offset();
  const double* b1 = m.params.data() + cfg.fc1_bias_offset();
  for (int h = 0; h < cfg.fc_hidden; ++h) {
    double acc = b1[h];
    const double* row = w1 + static_cast<std::size_t>(h) * flat;
    for (int i = 0; i < flat; ++i) acc += row[i] * in[i];
    acts.fc1_pre[h] = acc;
    acts.fc1_out[h] = acc > 0.0 ? acc : 0.0;
  }
  const double* w2 = m.params.data() + cfg.fc2_weight_offset();
  const double* b2 = m.params.data() + cfg.fc2_bias_offset();
  for (int o = 0; o < ModelConfig::kOutputs; ++o) {
    double acc = b2[o];
    const double* row = w2 + static_cast<std::size_t>(o) * cfg.fc_hidden;
    for (int h = 0; h < cfg.fc_hidden; ++h) acc += row[h] * acts.fc1_out[h];
    acts.out[o] = acc;
  }
}

/// Backpropagates d_out (gradient w.r.t. the three raw outputs) through a
/// recorded forward pass, accumulating into `grad`.
inline void backward(const Model& m, const Activations& acts, const std::array<double, 3>& d_out,
                     std::vector<double>& grad, std::vector<std::vector<double>>& d_block_scratch) {
  const ModelConfig& cfg = m.config;
  const int flat = cfg.flat_size();
  const int blocks = cfg.blocks();

  // fc2
  const double* w2 = m.params.data() + cfg.fc2_weight_offset();
  double* d_w2 = grad.data() + cfg.fc2_weight_offset();
  double* d_b2 = grad.data() + cfg.fc2_bias_offset();
  std::vector<double> d_h(cfg.fc_hidden, 0.0);
  for (int o = 0; o < ModelConfig::kOutputs; ++o) {
    d_b2[o] += d_out[o];
    double* d_row = d_w2 + static_cast<std::size_t>(o) * cfg.fc_hidden;
    const double* row = w2 + static_cast<std::size_t>(o) * cfg.fc_hidden;
    for (int h = 0; h < cfg.fc_hidden; ++h) {
      d_row[h] += d_out[o] * acts.fc1_out[h];
      d_h[h] += row[h] * d_out[o];
    }
  }
  // fc1 (+ relu)
  const double* flat_in = acts.block_out[blocks - 1].data();
  const double* w1 = m.params.data() + cfg.fc1_weight_offset();
  double* d_w1 = grad.data() + cfg.fc1_weight_offset();
  double* d_b1 = grad.data() + cfg.fc1_bias_offset();
  d_block_scratch.resize(blocks + 1);
  std::vector<double>& d_flat = d_block_scratch[blocks];
  d_flat.assign(flat, 0.0);
  for (int h = 0; h < cfg.fc_hidden; ++h) {
    if (acts.fc1_pre[h] <= 0.0) continue;
    const double g = d_h[h];
    d_b1[h] += g;
    double* d_row = d_w1 + static_cast<std::size_t>(h) * flat;
    const double* row = w1 + static_cast<std::size_t>(h) * flat;
    for (int i = 0; i < flat; ++i) {
      d_row[i] += g * flat_in[i];
      d_flat[i] += g * row[i];
    }
  }
  // conv blocks, last to first
  const double* d_above = d_flat.data();
  for (int b = blocks - 1; b >= 0; --b) {
    const int s = cfg.spatial(b);
    const int c_out = cfg.conv_channels[b], c_in = cfg.channels_in(b);
    const std::size_t out_plane = static_cast<std::size_t>(s / 2) * (s / 2);
    // relu + unpool back to conv-out resolution
    std::vector<double>& d_conv = d_block_scratch[b];
    d_conv.assign(static_cast<std::size_t>(c_out) * s * s, 0.0);
    const std::vector<double>& block_out = acts.block_out[b];
    const std::vector<int>& argmax = acts.pool_argmax[b];
    for (std::size_t i = 0; i < static_cast<std::size_t>(c_out) * out_plane; ++i) {
      if (block_out[i] > 0.0) d_conv[argmax[i]] += d_above[i];
    }
    const double* in = b == 0 ? acts.input.data() : acts.block_out[b - 1].data();
    std::vector<double> d_in;
    if (b > 0) d_in.assign(static_cast<std::size_t>(c_in) * s * s, 0.0);
    conv3x3_backward(in, c_in, s, m.params.data() + cfg.conv_weight_offset(b), c_out,
                     d_conv.data(), grad.data() + cfg.conv_weight_offset(b),
                     grad.data() + cfg.conv_bias_offset(b), b > 0 ? d_in.data() : nullptr);
    if (b > 0) {
      d_block_scratch[b] = std::move(d_in);
      d_above = d_block_scratch[b].data();
    }
  }
}

}  // namespace model_detail

/// Runs the network on one image. The raw orientation output is wrapped into
/// (-pi, pi]; `mask` stamps which components the caller treats as evaluated.
inline Pose2 forward(const Model& m, const Image& img, PoseMask mask = PoseMask::all()) {
  model_detail::Activations acts;
  model_detail::forward_raw(m, img, acts);
  return Pose2(acts.out[0], acts.out[1], wrap_angle(acts.out[2]), mask);
}

/// Training loss: L1 over the evaluated position components plus the cosine
/// loss 1 - cos(theta - theta_hat) when orientation is evaluated. Zero iff
/// the evaluated components agree (orientation mod 2*pi).
inline double loss(const Pose2& pred, const Pose2& truth) {
  if (!(pred.mask == truth.mask)) throw std::invalid_argument("loss: mask mismatch");
  double total = 0.0;
  if (truth.mask.x) total += std::abs(pred.x - truth.x);
  if (truth.mask.y) total += std::abs(pred.y - truth.y);
  if (truth.mask.theta) total += std::abs(std::cos(pred.theta - truth.theta) - 1.0);
  return total;
}

struct TrainItem {
  const Image* image = nullptr;
  Pose2 target;
};

namespace model_detail {

// Fixed group count makes the gradient reduction order independent of both
// the worker count and the machine.
inline constexpr int kGradGroups = 8;

struct GradWorkspace {
  std::vector<std::vector<double>> group_grad;
  std::vector<double> group_loss;
  std::vector<Activations> group_acts;
  std::vector<std::vector<std::vector<double>>> group_scratch;
};

}  // namespace model_detail

/// Gradient of the mean batch loss w.r.t. every parameter. Also returns the
/// mean loss through `mean_loss_out` when non-null. Items are processed in
/// fixed groups so the result is identical for any worker count.
inline std::vector<double> loss_gradient(const Model& m, std::span<const TrainItem> batch,
                                         double* mean_loss_out = nullptr,
                                         model_detail::GradWorkspace* ws = nullptr) {
  if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
  const int n_params = m.config.param_count();
  model_detail::GradWorkspace local;
  if (!ws) ws = &local;
  const int groups = static_cast<int>(std::min<std::size_t>(model_detail::kGradGroups, batch.size()));
  ws->group_grad.resize(groups);
  ws->group_loss.assign(groups, 0.0);
  ws->group_acts.resize(groups);
  ws->group_scratch.resize(groups);
  parallel_for(groups, [&](std::size_t g) {
    ws->group_grad[g].assign(n_params, 0.0);
    const std::size_t begin = batch.size() * g / groups;
    const std::size_t end = batch.size() * (g + 1) / groups;
    for (std::size_t i = begin; i < end; ++i) {
      const TrainItem& item = batch[i];
      model_detail::forward_raw(m, *item.image, ws->group_acts[g]);
      const auto& out = ws->group_acts[g].out;
      std::array<double, 3> d_out{};
      double item_loss = 0.0;
      const Pose2& t = item.target;
      if (t.mask.x) {
        item_loss += std::abs(out[0] - t.x);
        d_out[0] = out[0] > t.x ? 1.0 : (out[0] < t.x ? -1.0 : 0.0);
      }
      if (t.mask.y) {
        item_loss += std::abs(out[1] - t.y);
        d_out[1] = out[1] > t.y ? 1.0 : (out[1] < t.y ? -1.0 : 0.0);
      }
      if (t.mask.theta) {
        item_loss += 1.0 - std::cos(out[2] - t.theta);
        d_out[2] = std::sin(out[2] - t.theta);
      }
      ws->group_loss[g] += item_loss;
      model_detail::backward(m, ws->group_acts[g], d_out, ws->group_grad[g],
                             ws->group_scratch[g]);
    }
  });
  std::vector<double> grad(n_params, 0.0);
  double total_loss = 0.0;
  for (int g = 0; g < groups; ++g) {
    const std::vector<double>& gg = ws->group_grad[g];
    for (int i = 0; i < n_params; ++i) grad[i] += gg[i];
    total_loss += ws->group_loss[g];
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& v : grad) v *= inv_n;
  if (mean_loss_out) *mean_loss_out = total_loss * inv_n;
  return grad;
}

// --- checkpoint i/o --------------------------------------------------------

namespace model_detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  out.write(b, 4);
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}
inline std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  return lo | (static_cast<std::uint64_t>(get_u32(in)) << 32);
}

}  // namespace model_detail

/// Binary checkpoint: "ITDR" magic, format version, architecture block, then
/// the parameters as little-endian 64-bit floats in layer order.
inline void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open '" + path.string() + "'");
  out.write("ITDR", 4);
  model_detail::put_u32(out, 1);  // version
  model_detail::put_u32(out, static_cast<std::uint32_t>(m.config.input_size));
  model_detail::put_u32(out, static_cast<std::uint32_t>(m.config.blocks()));
  for (int c : m.config.conv_channels) model_detail::put_u32(out, static_cast<std::uint32_t>(c));
  model_detail::put_u32(out, static_cast<std::uint32_t>(m.config.fc_hidden));
  model_detail::put_u32(out, ModelConfig::kOutputs);
  model_detail::put_u64(out, m.init_seed);
  model_detail::put_u64(out, static_cast<std::uint64_t>(m.params.size()));
  for (double v : m.params) model_detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("save_model: write failed for '" + path.string() + "'");
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ITDR", 4) != 0)
    throw std::runtime_error("load_model: '" + path.string() + "' is not a model checkpoint");
  const std::uint32_t version = model_detail::get_u32(in);
  if (version != 1)
    throw std::runtime_error("load_model: unsupported checkpoint version " + std::to_string(version));
  Model m;
  m.config.input_size = static_cast<int>(model_detail::get_u32(in));
  const std::uint32_t blocks = model_detail::get_u32(in);
  m.config.conv_channels.resize(blocks);
  for (std::uint32_t b = 0; b < blocks; ++b)
    m.config.conv_channels[b] = static_cast<int>(model_detail::get_u32(in));
  m.config.fc_hidden = static_cast<int>(model_detail::get_u32(in));
  const std::uint32_t outputs = model_detail::get_u32(in);
  m.init_seed = model_detail::get_u64(in);
  const std::uint64_t count = model_detail::get_u64(in);
  if (!in || outputs != ModelConfig::kOutputs)
    throw std::runtime_error("load_model: corrupt header in '" + path.string() + "'");
  m.config.validate();
  if (count != static_cast<std::uint64_t>(m.config.param_count()))
    throw std::runtime_error("load_model: parameter count mismatch in '" + path.string() + "'");
  m.params.resize(count);
  for (std::uint64_t i = 0; i < count; ++i)
    m.params[i] = std::bit_cast<double>(model_detail::get_u64(in));
  if (!in) throw std::runtime_error("load_model: truncated checkpoint '" + path.string() + "'");
  return m;
}

}  // namespace itdr
