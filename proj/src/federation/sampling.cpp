#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedgest/error.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/rng.hpp"

namespace fedgest::federation {

void FedConfig::validate() const {
  if (clients < 1) throw Error(Errc::range, "federation needs at least one client");
  if (rounds < 1) throw Error(Errc::range, "federation needs at least one round");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Errc::range, "participation fraction must lie in (0, 1]");
  }
}

int sample_count(int clients, double fraction) {
  if (clients < 1) throw Error(Errc::range, "client count must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Errc::range, "participation fraction must lie in (0, 1]");
  }
  // The epsilon keeps products like 0.1 * 30 = 3.0000000000000004 at 3.
  const auto m = static_cast<int>(std::ceil(fraction * clients - 1e-9));
  return std::clamp(m, 1, clients);
}

std::vector<int> sample_clients(int clients, double fraction, std::uint64_t seed, int round) {
  const int m = sample_count(clients, fraction);
  std::vector<int> ids(static_cast<std::size_t>(clients));
  std::iota(ids.begin(), ids.end(), 0);
  if (m == clients) return ids;
  Rng rng = make_rng(seed, 0x5a3700 + static_cast<std::uint64_t>(round));
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, clients - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(pick(rng))]);
  }
  ids.resize(static_cast<std::size_t>(m));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::uint64_t round_seed(std::uint64_t base, int round) {
  return round == 0 ? base : mix_seed(base, 0xf0000 + static_cast<std::uint64_t>(round));
}

}  // namespace fedgest::federation
