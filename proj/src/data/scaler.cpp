#include <algorithm>
#include <limits>

#include "fedgest/data.hpp"
#include "fedgest/error.hpp"

namespace fedgest::data {

ScalerParams fit_scaler(const Dataset& ds) {
  if (ds.empty()) throw Error(Errc::empty, "cannot fit a scaler on an empty dataset");
  const auto width = static_cast<std::size_t>(ds.feature_width());
  ScalerParams s;
  s.min.assign(width, std::numeric_limits<double>::infinity());
  s.max.assign(width, -std::numeric_limits<double>::infinity());
  for (const auto& clip : ds.clips) {
    for (std::size_t i = 0; i < clip.values.size(); ++i) {
      const std::size_t f = i % width;
      s.min[f] = std::min(s.min[f], static_cast<double>(clip.values[i]));
      s.max[f] = std::max(s.max[f], static_cast<double>(clip.values[i]));
    }
  }
  return s;
}

void apply_scaler_inplace(std::span<float> clip_values, const ScalerParams& s) {
  const std::size_t width = s.features();
  if (width == 0 || clip_values.size() % width != 0) {
    throw Error(Errc::dimension, "scaler width does not match the clip layout");
  }
  for (std::size_t i = 0; i < clip_values.size(); ++i) {
    const std::size_t f = i % width;
    const double range = s.max[f] - s.min[f];
    clip_values[i] = range > 0.0
                         ? static_cast<float>((clip_values[i] - s.min[f]) / range)
                         : 0.0f;
  }
}

Dataset apply_scaler(const Dataset& ds, const ScalerParams& s) {
  if (s.features() != static_cast<std::size_t>(ds.feature_width())) {
    throw Error(Errc::dimension,
                "scaler fitted on " + std::to_string(s.features()) +
                    " features, dataset has " + std::to_string(ds.feature_width()));
  }
  Dataset out = ds;
  for (auto& clip : out.clips) apply_scaler_inplace(clip.values, s);
  return out;
}

Dataset inverse_scaler(const Dataset& ds, const ScalerParams& s) {
  if (s.features() != static_cast<std::size_t>(ds.feature_width())) {
    throw Error(Errc::dimension, "scaler width does not match the dataset");
  }
  const std::size_t width = s.features();
  Dataset out = ds;
  for (auto& clip : out.clips) {
    for (std::size_t i = 0; i < clip.values.size(); ++i) {
      const std::size_t f = i % width;
      clip.values[i] =
          static_cast<float>(clip.values[i] * (s.max[f] - s.min[f]) + s.min[f]);
    }
  }
  return out;
}

}  // namespace fedgest::data
