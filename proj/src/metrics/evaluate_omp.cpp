#include <omp.h>

#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"

namespace fedgest::metrics {

namespace {
void check(const model::ModelParams& params, const data::Dataset& ds) {
  if (ds.empty()) throw Error(Errc::empty, "cannot evaluate on an empty dataset");
  if (ds.class_count() != params.config().classes) {
    throw Error(Errc::dimension, "dataset has " + std::to_string(ds.class_count()) +
                                     " classes, model has " +
                                     std::to_string(params.config().classes));
  }
}
}  // namespace

Evaluation evaluate(const model::ModelParams& params, const data::Dataset& ds, int threads) {
  check(params, ds);
  model::check_input(params.config(), ds.clips.front().values);
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  std::vector<double> losses(ds.size());
  std::vector<int> predicted(ds.size());
  bool failed = false;
  std::string failure;

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : omp_get_max_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& clip = ds.clips[i];
      const auto p = model::predict(params, clip.values);
      losses[i] = model::loss(p, clip.label);
      predicted[i] = argmax(p);
    } catch (const std::exception& e) {
#pragma omp critical(fedgest_evaluate_error)
      {
        failed = true;
        failure = e.what();
      }
    }
  }
  if (failed) throw Error(Errc::dimension, failure);

  Evaluation ev{0.0, 0.0, ConfusionMatrix(ds.class_count())};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ev.loss += losses[i];
    ev.confusion.add(ds.clips[i].label, predicted[i]);
  }
  ev.loss /= static_cast<double>(ds.size());
  ev.accuracy = accuracy(ev.confusion);
  return ev;
}

Evaluation evaluate_serial(const model::ModelParams& params, const data::Dataset& ds) {
  check(params, ds);
  Evaluation ev{0.0, 0.0, ConfusionMatrix(ds.class_count())};
  for (const auto& clip : ds.clips) {
    const auto p = model::predict(params, clip.values);
    ev.loss += model::loss(p, clip.label);
    ev.confusion.add(clip.label, argmax(p));
  }
  ev.loss /= static_cast<double>(ds.size());
  ev.accuracy = accuracy(ev.confusion);
  return ev;
}

}  // namespace fedgest::metrics
