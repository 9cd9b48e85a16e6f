#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgest/data.hpp"
#include "fedgest/model.hpp"

namespace fedgest::training {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 750;
  double learning_rate = 1e-3;
  int early_stop_patience = 300;
  int plateau_patience = 25;
  double plateau_factor = 0.5;
  double plateau_min_delta = 1e-4;
  double min_learning_rate = 1e-6;
  // Global L2 gradient-norm cap applied before each step; 0 disables it.
  // The ReLU cell state is unbounded, so BPTT gradients occasionally spike
  // by several orders of magnitude and plain SGD diverges without it.
  double clip_norm = 1.0;
  std::uint64_t seed = 7;
  int threads = 0;  // 0 = OpenMP default

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss;      // mean train-mode loss per epoch
  std::vector<double> accuracy;  // train-mode accuracy per epoch
  std::vector<double> learning_rate;  // rate used during each epoch
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based
  double best_loss = 0.0;
  double final_learning_rate = 0.0;
  bool stopped_early = false;
  // Infer-mode metrics of the returned (best) weights on the training data.
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double wall_seconds = 0.0;

  /// Deterministic fields at the top level; wall time under "timing".
  nlohmann::json to_json() const;
  std::string to_csv() const;  // epoch,loss,accuracy,lr
};

/// Splits `ds` into batches of size B (last one may be smaller) whose class
/// mix tracks the global proportions: in every full batch each class count
/// is within one sample of B * n_c / N. Returns clip indices.
std::vector<std::vector<std::size_t>> stratified_batches(const data::Dataset& ds,
                                                         int batch_size,
                                                         std::uint64_t seed);

/// Multiplies the learning rate by `factor` (floored at `min_lr`) once the
/// monitored loss fails to improve by more than `min_delta` for `patience`
/// consecutive epochs.
class ReduceLrOnPlateau {
 public:
  ReduceLrOnPlateau(double lr, int patience, double factor, double min_lr,
                    double min_delta = 1e-4);

  double update(double loss);
  double learning_rate() const noexcept { return lr_; }

 private:
  double lr_;
  int patience_;
  double factor_;
  double min_lr_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

/// Tracks the lowest loss seen and the weights that produced it; asks to
/// stop after `patience` epochs without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Returns true when training should stop.
  bool update(double loss, int epoch, const model::ModelParams& params);

  bool has_best() const noexcept { return best_params_.has_value(); }
  const model::ModelParams& best_params() const { return *best_params_; }
  int best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  int patience_;
  int wait_ = 0;
  int best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::optional<model::ModelParams> best_params_;
};

struct ClientResult {
  model::ModelParams params;
  std::size_t samples = 0;
  TrainReport report;
};

/// Local minibatch SGD on one client's (scaled) data: batches are split once,
/// each epoch runs w <- w - lr * grad over them (grad norm-capped
/// at clip_norm), then the plateau and
/// early-stopping callbacks see the mean epoch loss. Returns the best-loss
/// weights. A batch size larger than the client's data is clamped.
ClientResult client_train(int client_id, const model::ModelParams& initial,
                          const data::Dataset& ds, const TrainConfig& cfg);

}  // namespace fedgest::training
