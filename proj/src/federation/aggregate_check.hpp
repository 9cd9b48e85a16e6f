#pragma once

#include <string>

#include "fedgest/error.hpp"
#include "fedgest/federation.hpp"

namespace fedgest::federation::detail {

// Validates an update set and returns m_t = sum n_k.
inline double check_updates(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw Error(Errc::empty, "cannot aggregate an empty update set");
  const std::size_t n = updates.front().params.size();
  double m = 0.0;
  for (const auto& u : updates) {
    if (u.params.size() != n) {
      throw Error(Errc::dimension, "client " + std::to_string(u.client_id) + " sent " +
                                       std::to_string(u.params.size()) +
                                       " parameters, expected " + std::to_string(n));
    }
    if (u.samples < 1) {
      throw Error(Errc::range, "client " + std::to_string(u.client_id) + " reported n_k = 0");
    }
    m += static_cast<double>(u.samples);
  }
  return m;
}

}  // namespace fedgest::federation::detail
