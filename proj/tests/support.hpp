#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "fedgest/data.hpp"
#include "fedgest/model.hpp"
#include "fedgest/pipeline.hpp"
#include "fedgest/rng.hpp"

namespace fedgest::testing {

/// Reduced model used wherever finite differences or speed matter.
inline model::ModelConfig tiny_model(int joints = 2, int window = 3, int classes = 2,
                                     std::uint64_t seed = 1) {
  model::ModelConfig mc;
  mc.input_width = 3 * joints;
  mc.window = window;
  mc.lstm1_units = 4;
  mc.lstm2_units = 4;
  mc.dense1_units = 4;
  mc.dense2_units = 4;
  mc.classes = classes;
  mc.init_seed = seed;
  return mc;
}

/// Random dataset with uniform coordinates in [0, 1); labels cycle through
/// the classes unless `labels` is given.
inline data::Dataset random_dataset(int clips, int classes, int joints, int window,
                                    std::uint64_t seed) {
  data::Dataset ds;
  ds.joints = joints;
  ds.window = window;
  ds.classes = data::default_classes(classes);
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int i = 0; i < clips; ++i) {
    data::ActionClip c;
    c.label = i % classes;
    c.values.resize(static_cast<std::size_t>(window) * joints * 3);
    for (auto& v : c.values) v = u(rng);
    ds.clips.push_back(std::move(c));
  }
  return ds;
}

/// Batch of `n` random clips shaped for `mc`, labels cycling over the classes.
struct RandomBatch {
  std::vector<std::vector<float>> clips;
  std::vector<model::Example> examples;
};

inline RandomBatch random_batch(const model::ModelConfig& mc, int n, std::uint64_t seed) {
  RandomBatch b;
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int i = 0; i < n; ++i) {
    std::vector<float> c(static_cast<std::size_t>(mc.window) * mc.input_width);
    for (auto& v : c) v = u(rng);
    b.clips.push_back(std::move(c));
  }
  for (int i = 0; i < n; ++i) b.examples.push_back({b.clips[i], i % mc.classes});
  return b;
}

/// Mean train-mode loss of the batch with the dropout masks backward() uses.
inline double batch_loss(const model::ModelParams& p, std::span<const model::Example> batch,
                         std::uint64_t dropout_seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng = model::example_rng(dropout_seed, i);
    const auto out = model::forward(p, batch[i].input, model::Mode::train, &rng);
    total += model::loss(out.probabilities, batch[i].label);
  }
  return total / static_cast<double>(batch.size());
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst = 0;
  std::size_t checked = 0;
};

/// Compares backward() with central differences on every parameter.
/// Relative error uses max(|analytic|, |numeric|, 1e-7) as denominator so
/// components that are zero in both do not divide by zero.
inline GradCheck gradient_check(const model::ModelConfig& mc, std::uint64_t seed,
                                int batch = 2, double h = 1e-5) {
  auto p = model::init_params(mc);
  // Perturb away from the symmetric init so biases get nonzero gradients.
  Rng rng(seed ^ 0xabcdefULL);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& v : p.values()) v += u(rng);
  const auto b = random_batch(mc, batch, seed);
  const auto g = model::backward_serial(p, b.examples, seed);
  GradCheck out;
  auto vals = p.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double keep = vals[i];
    vals[i] = keep + h;
    const double up = batch_loss(p, b.examples, seed);
    vals[i] = keep - h;
    const double down = batch_loss(p, b.examples, seed);
    vals[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = g.grad.values()[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst = i;
    }
    ++out.checked;
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Scripted replay log. Every detected frame puts the action id in each
/// joint's x coordinate, so `marker_classifier` can read the intended class
/// straight off the clip.
class LogBuilder {
 public:
  LogBuilder(int joints, int window, std::int64_t period_ms = 33)
      : joints_(joints), window_(window), period_(period_ms) {}

  /// `clips` consecutive windows of `action`; returns the next free time.
  std::int64_t action(int observer, std::int64_t t, int action, int clips = 1) {
    for (int i = 0; i < clips * window_; ++i, t += period_) {
      pipeline::ObserverFrame f;
      f.observer = observer;
      f.t_ms = t;
      f.detected = true;
      f.keypoints.joints.assign(static_cast<std::size_t>(joints_),
                                data::Vec3{static_cast<double>(action), 0.0, 0.0});
      frames_.push_back(std::move(f));
    }
    return t;
  }

  std::int64_t undetected(int observer, std::int64_t t, int frames = 1) {
    for (int i = 0; i < frames; ++i, t += period_) {
      frames_.push_back({observer, t, false, {}});
    }
    return t;
  }

  /// JSON lines in timestamp order (stable across observers).
  std::string str() const {
    auto sorted = frames_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.t_ms < b.t_ms; });
    std::string out;
    for (const auto& f : sorted) out += pipeline::frame_to_json(f).dump() + "\n";
    return out;
  }

 private:
  int joints_;
  int window_;
  std::int64_t period_;
  std::vector<pipeline::ObserverFrame> frames_;
};

inline pipeline::Classifier marker_classifier(int classes, double peak = 0.9) {
  return [classes, peak](std::span<const float> clip) {
    const int c = static_cast<int>(std::lround(clip[0]));
    std::vector<double> p(static_cast<std::size_t>(classes), (1.0 - peak) / (classes - 1));
    p[static_cast<std::size_t>(c)] = peak;
    return p;
  };
}

}  // namespace fedgest::testing
