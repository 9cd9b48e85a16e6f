#include <cmath>
#include <random>
#include <string>

#include "fedgest/error.hpp"
#include "fedgest/model.hpp"

namespace fedgest::model {

void ModelConfig::validate() const {
  if (input_width < 1 || window < 1 || lstm1_units < 1 || lstm2_units < 1 ||
      dense1_units < 1 || dense2_units < 1 || classes < 1) {
    throw Error(Errc::range, "model unit counts must all be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(Errc::range, "dropout_rate must lie in [0, 1)");
  }
}

std::string_view tensor_name(Tensor t) noexcept {
  static constexpr std::string_view kNames[kTensorCount] = {
      "lstm1/kernel", "lstm1/recurrent_kernel", "lstm1/bias",
      "lstm2/kernel", "lstm2/recurrent_kernel", "lstm2/bias",
      "dense1/kernel", "dense1/bias", "dense2/kernel",
      "dense2/bias",  "dense3/kernel", "dense3/bias"};
  return kNames[static_cast<int>(t)];
}

ParamLayout ParamLayout::of(const ModelConfig& cfg) {
  cfg.validate();
  ParamLayout l;
  std::size_t off = 0;
  int i = 0;
  auto add = [&](int rows, int cols) {
    Slot s{off, static_cast<std::size_t>(rows) * cols, rows, cols};
    l.slots[i++] = s;
    off += s.size;
  };
  auto lstm = [&](int in, int units) {
    add(in, 4 * units);
    add(units, 4 * units);
    add(1, 4 * units);
  };
  auto dense = [&](int in, int out) {
    add(in, out);
    add(1, out);
  };
  lstm(cfg.input_width, cfg.lstm1_units);
  lstm(cfg.lstm1_units, cfg.lstm2_units);
  dense(cfg.lstm2_units, cfg.dense1_units);
  dense(cfg.dense1_units, cfg.dense2_units);
  dense(cfg.dense2_units, cfg.classes);
  l.total = off;
  return l;
}

std::size_t parameter_count(const ModelConfig& cfg) { return ParamLayout::of(cfg).total; }

ModelParams::ModelParams(const ModelConfig& cfg)
    : cfg_(cfg), layout_(ParamLayout::of(cfg)), values_(layout_.total, 0.0) {}

std::span<double> ModelParams::tensor(Tensor t) {
  const Slot& s = layout_[t];
  return std::span<double>(values_).subspan(s.offset, s.size);
}

std::span<const double> ModelParams::tensor(Tensor t) const {
  const Slot& s = layout_[t];
  return std::span<const double>(values_).subspan(s.offset, s.size);
}

namespace {

void glorot_uniform(std::span<double> w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto& v : w) v = u(rng);
}

// Rows of the (units x 4·units) matrix made orthonormal by modified
// Gram-Schmidt on Gaussian draws.
void orthogonal_rows(std::span<double> w, int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : w) v = n(rng);
  for (int r = 0; r < rows; ++r) {
    double* row = w.data() + static_cast<std::size_t>(r) * cols;
    for (int p = 0; p < r; ++p) {
      const double* prev = w.data() + static_cast<std::size_t>(p) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += row[c] * prev[c];
      for (int c = 0; c < cols; ++c) row[c] -= dot * prev[c];
    }
    double norm = 0.0;
    for (int c = 0; c < cols; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    for (int c = 0; c < cols; ++c) row[c] /= norm;
  }
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
  ModelParams p(cfg);
  const ParamLayout& l = p.layout();
  for (int i = 0; i < kTensorCount; ++i) {
    const auto t = static_cast<Tensor>(i);
    const Slot& s = l[t];
    Rng rng = make_rng(cfg.init_seed, static_cast<std::uint64_t>(i));
    switch (t) {
      case Tensor::lstm1_recurrent:
      case Tensor::lstm2_recurrent:
        orthogonal_rows(p.tensor(t), s.rows, s.cols, rng);
        break;
      case Tensor::lstm1_kernel:
      case Tensor::lstm2_kernel:
      case Tensor::dense1_kernel:
      case Tensor::dense2_kernel:
      case Tensor::dense3_kernel:
        glorot_uniform(p.tensor(t), s.rows, s.cols, rng);
        break;
      case Tensor::lstm1_bias:
      case Tensor::lstm2_bias: {
        auto b = p.tensor(t);
        const std::size_t units = b.size() / 4;
        for (std::size_t j = units; j < 2 * units; ++j) b[j] = 1.0;
        break;
      }
      default:
        break;
    }
  }
  return p;
}

std::vector<double> flatten(const ModelParams& p) {
  return {p.values().begin(), p.values().end()};
}

ModelParams unflatten(const ModelConfig& cfg, std::span<const double> flat) {
  ModelParams p(cfg);
  if (flat.size() != p.size()) {
    throw Error(Errc::dimension, "flat parameter array has " +
                                     std::to_string(flat.size()) +
                                     " values, model needs " + std::to_string(p.size()));
  }
  std::copy(flat.begin(), flat.end(), p.values().begin());
  return p;
}

std::vector<float> to_float32(const ModelParams& p) {
  std::vector<float> out(p.size());
  const auto v = p.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

ModelParams from_float32(const ModelConfig& cfg, std::span<const float> flat) {
  ModelParams p(cfg);
  if (flat.size() != p.size()) {
    throw Error(Errc::dimension, "flat parameter array has " +
                                     std::to_string(flat.size()) +
                                     " values, model needs " + std::to_string(p.size()));
  }
  auto v = p.values();
  for (std::size_t i = 0; i < flat.size(); ++i) v[i] = flat[i];
  return p;
}

ModelParams quantize_float32(const ModelParams& p) {
  ModelParams q = p;
  for (auto& v : q.values()) v = static_cast<double>(static_cast<float>(v));
  return q;
}

}  // namespace fedgest::model
