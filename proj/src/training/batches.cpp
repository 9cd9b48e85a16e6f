#include <algorithm>
#include <numeric>

#include "fedgest/error.hpp"
#include "fedgest/rng.hpp"
#include "fedgest/training.hpp"

namespace fedgest::training {

std::vector<std::vector<std::size_t>> stratified_batches(const data::Dataset& ds,
                                                         int batch_size,
                                                         std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (batch_size < 1) throw Error(Errc::range, "batch size must be >= 1");
  const auto b = static_cast<std::size_t>(batch_size);
  if (b > n) {
    throw Error(Errc::range, "batch size " + std::to_string(b) + " exceeds the " +
                                 std::to_string(n) + " available clips");
  }

  const std::size_t classes = ds.classes.size();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(ds.clips[i].label)].push_back(i);
  }
  Rng rng(mix_seed(seed, 0xba7c));
  for (auto& m : members) std::shuffle(m.begin(), m.end(), rng);

  const std::size_t full = n / b;
  const std::size_t rest = n % b;
  const std::size_t batches = full + (rest ? 1 : 0);

  // Every full batch gets floor(B n_c / N) of class c; the e = B - sum(floor)
  // leftover slots per batch go one-per-class, dealt round-robin so a class
  // never gets two bonus slots in the same batch.
  std::vector<std::size_t> base(classes), frac(classes);
  std::size_t base_sum = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    base[c] = b * members[c].size() / n;
    frac[c] = b * members[c].size() % n;
    base_sum += base[c];
  }
  const std::size_t extra = b - base_sum;

  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return frac[a] > frac[c]; });

  std::vector<std::vector<std::size_t>> count(batches, std::vector<std::size_t>(classes, 0));
  for (std::size_t k = 0; k < full; ++k) {
    for (std::size_t c = 0; c < classes; ++c) count[k][c] = base[c];
  }
  std::size_t token = 0;
  const std::size_t wanted = full * extra;
  for (std::size_t c : order) {
    const std::size_t left = members[c].size() - full * base[c];
    const std::size_t tokens = std::min(left, full);
    for (std::size_t t = 0; t < tokens && token < wanted; ++t, ++token) {
      count[token % full][c]++;
    }
  }
  if (token != wanted) {
    throw Error(Errc::domain, "internal error: stratified split is infeasible");
  }
  if (rest) {
    for (std::size_t c = 0; c < classes; ++c) {
      std::size_t used = 0;
      for (std::size_t k = 0; k < full; ++k) used += count[k][c];
      count[full][c] = members[c].size() - used;
    }
  }

  std::vector<std::vector<std::size_t>> out(batches);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t next = 0;
    for (std::size_t k = 0; k < batches; ++k) {
      for (std::size_t j = 0; j < count[k][c]; ++j) out[k].push_back(members[c][next++]);
    }
  }
  for (auto& batch : out) std::shuffle(batch.begin(), batch.end(), rng);
  return out;
}

}  // namespace fedgest::training
