#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedgest/rng.hpp"

namespace fedgest::model {

/// Shape of the classifier: LSTM(30, sequences) -> LSTM(64, last state) ->
/// Dense(64, ReLU) -> Dropout(0.2) -> Dense(32, ReLU) -> Dense(13, softmax).
struct ModelConfig {
  int input_width = 99;
  int window = 60;
  int lstm1_units = 30;
  int lstm2_units = 64;
  int dense1_units = 64;
  double dropout_rate = 0.2;
  int dense2_units = 32;
  int classes = 13;
  std::uint64_t init_seed = 42;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Every parameter tensor, in flatten() order.
enum class Tensor : int {
  lstm1_kernel,
  lstm1_recurrent,
  lstm1_bias,
  lstm2_kernel,
  lstm2_recurrent,
  lstm2_bias,
  dense1_kernel,
  dense1_bias,
  dense2_kernel,
  dense2_bias,
  dense3_kernel,
  dense3_bias,
};
inline constexpr int kTensorCount = 12;

std::string_view tensor_name(Tensor t) noexcept;

struct Slot {
  std::size_t offset = 0;
  std::size_t size = 0;
  int rows = 0;  // fan-in for kernels, 1 for biases
  int cols = 0;
};

/// Offsets of each tensor inside the flat parameter vector. Kernels are
/// row-major (in x out); recurrent layers pack gates as [input, forget,
/// candidate, output] along the output axis.
struct ParamLayout {
  std::array<Slot, kTensorCount> slots{};
  std::size_t total = 0;

  static ParamLayout of(const ModelConfig& cfg);
  const Slot& operator[](Tensor t) const { return slots[static_cast<int>(t)]; }
};

std::size_t parameter_count(const ModelConfig& cfg);

/// Value snapshot of all layer weights and biases, stored as one contiguous
/// float64 vector. Also used for gradients, which share the shape.
class ModelParams {
 public:
  explicit ModelParams(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> tensor(Tensor t);
  std::span<const double> tensor(Tensor t) const;

  bool operator==(const ModelParams& o) const {
    return cfg_ == o.cfg_ && values_ == o.values_;
  }

 private:
  ModelConfig cfg_;
  ParamLayout layout_;
  std::vector<double> values_;
};

/// Glorot-uniform kernels, orthogonal recurrent kernels, zero biases except
/// the recurrent forget-gate bias which starts at 1. Deterministic in
/// cfg.init_seed.
ModelParams init_params(const ModelConfig& cfg);

std::vector<double> flatten(const ModelParams& p);
ModelParams unflatten(const ModelConfig& cfg, std::span<const double> flat);

/// Wire/checkpoint precision.
std::vector<float> to_float32(const ModelParams& p);
ModelParams from_float32(const ModelConfig& cfg, std::span<const float> flat);
/// Round-trips every value through float32.
ModelParams quantize_float32(const ModelParams& p);

// ---------------------------------------------------------------------------
// Forward / backward

enum class Mode { train, infer };

struct LstmTrace {
  int steps = 0;
  int units = 0;
  std::vector<double> gates;   // steps x 4H, post-activation [i, f, g, o]
  std::vector<double> cell;    // steps x H
  std::vector<double> hidden;  // steps x H
};

/// Everything backpropagation needs from one training-mode forward pass.
struct ForwardTrace {
  std::vector<double> input;  // W x I
  LstmTrace lstm1;
  LstmTrace lstm2;
  std::vector<double> dense1;   // post-ReLU
  std::vector<double> mask;     // 0 or 1 / (1 - rate)
  std::vector<double> dropped;  // dense1 * mask
  std::vector<double> dense2;   // post-ReLU
  std::vector<double> probabilities;
};

struct ForwardResult {
  std::vector<double> probabilities;
  std::optional<ForwardTrace> trace;  // train mode only
};

/// `clip` is the scaled (W x 3K) row-major matrix. `rng` supplies the dropout
/// mask in train mode and is ignored in infer mode.
ForwardResult forward(const ModelParams& params, std::span<const float> clip,
                      Mode mode, Rng* rng = nullptr);

std::vector<double> predict(const ModelParams& params, std::span<const float> clip);

inline constexpr double kProbabilityFloor = 1e-12;

/// Categorical cross-entropy -log(max(p[label], 1e-12)).
double loss(std::span<const double> probabilities, int label);

struct Example {
  std::span<const float> input;
  int label = 0;
};

struct Gradient {
  ModelParams grad;
  double loss = 0.0;       // mean over the batch
  std::size_t correct = 0;  // train-mode argmax hits
};

struct ExampleOutcome {
  double loss = 0.0;
  int predicted = 0;
};

/// Adds d(loss)/d(params) for one example into `grad_out` (same length as
/// params). The dropout mask comes from `rng`.
ExampleOutcome accumulate_example_gradient(const ModelParams& params, const Example& ex,
                                           Rng& rng, std::span<double> grad_out);

/// Dropout stream for example `index` of a batch seeded with `seed`.
inline Rng example_rng(std::uint64_t seed, std::size_t index) {
  return make_rng(seed, 0xd50000 + index);
}

/// Mean cross-entropy gradient over the batch via BPTT. Examples are
/// processed in parallel; per-example gradients are reduced in index order,
/// so the result is bit-identical to backward_serial for any thread count.
Gradient backward(const ModelParams& params, std::span<const Example> batch,
                  std::uint64_t dropout_seed, int threads = 0);

/// Single-threaded reference for backward().
Gradient backward_serial(const ModelParams& params, std::span<const Example> batch,
                         std::uint64_t dropout_seed);

void check_input(const ModelConfig& cfg, std::span<const float> clip);

}  // namespace fedgest::model
