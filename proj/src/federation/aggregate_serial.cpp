#include "aggregate_check.hpp"

namespace fedgest::federation {

std::vector<double> aggregate_serial(std::span<const ClientUpdate> updates) {
  const double m = detail::check_updates(updates);
  const std::size_t n = updates.front().params.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (const auto& u : updates) acc += static_cast<double>(u.samples) * u.params[j];
    out[j] = acc / m;
  }
  return out;
}

}  // namespace fedgest::federation
