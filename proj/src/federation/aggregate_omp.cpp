#include <omp.h>

#include "aggregate_check.hpp"

namespace fedgest::federation {

std::vector<double> aggregate(std::span<const ClientUpdate> updates, int threads) {
  const double m = detail::check_updates(updates);
  const auto n = static_cast<std::ptrdiff_t>(updates.front().params.size());
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (const auto& u : updates) {
      acc += static_cast<double>(u.samples) * u.params[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(j)] = acc / m;
  }
  return out;
}

}  // namespace fedgest::federation
