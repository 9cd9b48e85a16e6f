#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"
#include "fedgest/rng.hpp"
#include "fedgest/training.hpp"

namespace fedgest::training {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(Errc::range, "batch_size must be >= 1");
  if (epochs < 1) throw Error(Errc::range, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(Errc::range, "learning_rate must be > 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw Error(Errc::range, "plateau_factor must lie in (0, 1)");
  }
  if (early_stop_patience < 0 || plateau_patience < 0) {
    throw Error(Errc::range, "patience values must be >= 0");
  }
  if (!(min_learning_rate > 0.0)) throw Error(Errc::range, "min_learning_rate must be > 0");
  if (plateau_min_delta < 0.0) throw Error(Errc::range, "plateau_min_delta must be >= 0");
  if (!(clip_norm >= 0.0)) throw Error(Errc::range, "clip_norm must be >= 0");
}

ReduceLrOnPlateau::ReduceLrOnPlateau(double lr, int patience, double factor,
                                     double min_lr, double min_delta)
    : lr_(lr), patience_(patience), factor_(factor), min_lr_(min_lr), min_delta_(min_delta) {
  if (!(lr > 0.0)) throw Error(Errc::range, "learning rate must be > 0");
}

double ReduceLrOnPlateau::update(double loss) {
  if (loss < best_ - min_delta_) {
    best_ = loss;
    wait_ = 0;
    return lr_;
  }
  if (++wait_ >= patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    wait_ = 0;
  }
  return lr_;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {}

bool EarlyStopping::update(double loss, int epoch, const model::ModelParams& params) {
  if (loss < best_loss_ || !best_params_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    best_params_ = params;
    wait_ = 0;
    return false;
  }
  return ++wait_ >= patience_;
}

nlohmann::json TrainReport::to_json() const {
  return {{"epochs_run", epochs_run},
          {"best_epoch", best_epoch},
          {"best_loss", best_loss},
          {"final_learning_rate", final_learning_rate},
          {"stopped_early", stopped_early},
          {"final_loss", final_loss},
          {"final_accuracy", final_accuracy},
          {"curves", {{"loss", loss}, {"accuracy", accuracy}, {"learning_rate", learning_rate}}},
          {"timing", {{"wall_seconds", wall_seconds}}}};
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,accuracy,lr\n";
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out << i + 1 << ',' << loss[i] << ',' << accuracy[i] << ',' << learning_rate[i] << '\n';
  }
  return out.str();
}

ClientResult client_train(int client_id, const model::ModelParams& initial,
                          const data::Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.empty()) {
    throw Error(Errc::empty, "client " + std::to_string(client_id) + " has no data");
  }
  const auto& mc = initial.config();
  if (ds.feature_width() != mc.input_width || ds.window != mc.window ||
      ds.class_count() != mc.classes) {
    throw Error(Errc::dimension,
                "client " + std::to_string(client_id) + " data is " +
                    std::to_string(ds.window) + " x " + std::to_string(ds.feature_width()) +
                    " with " + std::to_string(ds.class_count()) + " classes; model expects " +
                    std::to_string(mc.window) + " x " + std::to_string(mc.input_width) +
                    " with " + std::to_string(mc.classes));
  }
  const auto start = std::chrono::steady_clock::now();

  const int batch_size = std::min<int>(cfg.batch_size, static_cast<int>(ds.size()));
  const auto batches = stratified_batches(ds, batch_size, cfg.seed);
  std::vector<std::vector<model::Example>> examples(batches.size());
  for (std::size_t k = 0; k < batches.size(); ++k) {
    for (std::size_t idx : batches[k]) {
      examples[k].push_back({ds.clips[idx].values, ds.clips[idx].label});
    }
  }

  model::ModelParams w = initial;
  ReduceLrOnPlateau plateau(cfg.learning_rate, cfg.plateau_patience, cfg.plateau_factor,
                            cfg.min_learning_rate, cfg.plateau_min_delta);
  EarlyStopping stopper(cfg.early_stop_patience);
  TrainReport report;
  const auto n = static_cast<double>(ds.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = plateau.learning_rate();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < examples.size(); ++k) {
      const std::uint64_t step_id = static_cast<std::uint64_t>(epoch) * examples.size() + k;
      const auto g = model::backward(w, examples[k], mix_seed(cfg.seed, step_id), cfg.threads);
      auto v = w.values();
      const auto gv = g.grad.values();
      double step = lr;
      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (double x : gv) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) step *= cfg.clip_norm / norm;
      }
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= step * gv[j];
      loss_sum += g.loss * static_cast<double>(examples[k].size());
      correct += g.correct;
    }
    const double epoch_loss = loss_sum / n;
    report.loss.push_back(epoch_loss);
    report.accuracy.push_back(static_cast<double>(correct) / n);
    report.learning_rate.push_back(lr);
    report.epochs_run = epoch;

    plateau.update(epoch_loss);
    if (stopper.update(epoch_loss, epoch, w)) {
      report.stopped_early = epoch < cfg.epochs;
      break;
    }
  }

  ClientResult result{stopper.best_params(), ds.size(), {}};
  report.best_epoch = stopper.best_epoch();
  report.best_loss = stopper.best_loss();
  report.final_learning_rate = plateau.learning_rate();
  const auto ev = metrics::evaluate(result.params, ds, cfg.threads);
  report.final_loss = ev.loss;
  report.final_accuracy = ev.accuracy;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.report = std::move(report);
  return result;
}

}  // namespace fedgest::training
