#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedgest/data.hpp"
#include "fedgest/error.hpp"
#include "fedgest/rng.hpp"

namespace fedgest::data {

std::vector<Dataset> partition(const Dataset& ds, int n_clients,
                               double overlap_fraction, std::uint64_t seed) {
  if (n_clients < 1) throw Error(Errc::range, "need at least one client");
  if (static_cast<std::size_t>(n_clients) > ds.size()) {
    throw Error(Errc::range, std::to_string(n_clients) + " clients but only " +
                                 std::to_string(ds.size()) + " clips");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) {
    throw Error(Errc::range, "overlap_fraction must lie in [0, 1]");
  }

  const auto n = static_cast<std::size_t>(n_clients);
  std::vector<std::vector<std::size_t>> by_class(ds.classes.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.clips[i].label)].push_back(i);
  }

  Rng rng(mix_seed(seed, 0x9a47));
  std::vector<std::size_t> home(ds.size());
  std::size_t turn = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) home[idx] = turn++ % n;
  }

  std::vector<std::vector<std::size_t>> chosen(n);
  for (std::size_t i = 0; i < ds.size(); ++i) chosen[home[i]].push_back(i);

  if (overlap_fraction > 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::vector<std::size_t> foreign;
        for (std::size_t idx : by_class[c]) {
          if (home[idx] != k) foreign.push_back(idx);
        }
        const auto take = static_cast<std::size_t>(
            std::llround(overlap_fraction * static_cast<double>(foreign.size())));
        Rng pick = make_rng(seed, 0x10000 + k * by_class.size() + c);
        std::shuffle(foreign.begin(), foreign.end(), pick);
        chosen[k].insert(chosen[k].end(), foreign.begin(),
                         foreign.begin() + static_cast<std::ptrdiff_t>(take));
      }
    }
  }

  std::vector<Dataset> parts;
  parts.reserve(n);
  for (auto& idx : chosen) {
    std::sort(idx.begin(), idx.end());
    Dataset part = ds.empty_like();
    part.clips.reserve(idx.size());
    for (std::size_t i : idx) part.clips.push_back(ds.clips[i]);
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace fedgest::data
