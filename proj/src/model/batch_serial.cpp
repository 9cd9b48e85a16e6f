#include "fedgest/error.hpp"
#include "fedgest/model.hpp"

namespace fedgest::model {

Gradient backward_serial(const ModelParams& params, std::span<const Example> batch,
                         std::uint64_t dropout_seed) {
  if (batch.empty()) throw Error(Errc::empty, "backward needs a non-empty batch");
  const std::size_t width = params.size();
  std::vector<double> sum(width, 0.0), row(width);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    std::fill(row.begin(), row.end(), 0.0);
    Rng rng = example_rng(dropout_seed, e);
    const auto r = accumulate_example_gradient(params, batch[e], rng, row);
    total += r.loss;
    if (r.predicted == batch[e].label) ++correct;
    for (std::size_t j = 0; j < width; ++j) sum[j] += row[j];
  }
  Gradient out{ModelParams(params.config()), 0.0};
  const auto inv = 1.0 / static_cast<double>(batch.size());
  auto g = out.grad.values();
  for (std::size_t j = 0; j < width; ++j) g[j] = sum[j] * inv;
  out.loss = total * inv;
  out.correct = correct;
  return out;
}

}  // namespace fedgest::model
