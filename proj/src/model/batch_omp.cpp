#include <omp.h>

#include "fedgest/error.hpp"
#include "fedgest/model.hpp"

namespace fedgest::model {

Gradient backward(const ModelParams& params, std::span<const Example> batch,
                  std::uint64_t dropout_seed, int threads) {
  if (batch.empty()) throw Error(Errc::empty, "backward needs a non-empty batch");
  const std::size_t n = batch.size();
  const std::size_t width = params.size();
  const int team = threads > 0 ? threads : omp_get_max_threads();

  // One gradient row per example; the reduction below walks them in order.
  std::vector<double> rows(n * width, 0.0);
  std::vector<double> losses(n, 0.0);
  std::vector<int> hits(n, 0);
  bool failed = false;
  std::string failure;

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (std::ptrdiff_t e = 0; e < static_cast<std::ptrdiff_t>(n); ++e) {
    try {
      Rng rng = example_rng(dropout_seed, static_cast<std::size_t>(e));
      std::span<double> row(rows.data() + static_cast<std::size_t>(e) * width, width);
      const auto r = accumulate_example_gradient(params, batch[e], rng, row);
      losses[e] = r.loss;
      hits[e] = r.predicted == batch[e].label ? 1 : 0;
    } catch (const std::exception& ex) {
#pragma omp critical(fedgest_backward_error)
      {
        failed = true;
        failure = ex.what();
      }
    }
  }
  if (failed) throw Error(Errc::domain, failure);

  Gradient out{ModelParams(params.config()), 0.0};
  auto g = out.grad.values();
  const auto inv = 1.0 / static_cast<double>(n);

#pragma omp parallel for schedule(static) num_threads(team)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(width); ++j) {
    double s = 0.0;
    for (std::size_t e = 0; e < n; ++e) s += rows[e * width + j];
    g[j] = s * inv;
  }
  double total = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    total += losses[e];
    out.correct += static_cast<std::size_t>(hits[e]);
  }
  out.loss = total * inv;
  return out;
}

}  // namespace fedgest::model
