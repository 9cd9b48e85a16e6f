#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fedgest/data.hpp"
#include "fedgest/error.hpp"
#include "fedgest/rng.hpp"

namespace fedgest::data {

Vec3 unit_x() { return {1.0, 0.0, 0.0}; }
Vec3 unit_y() { return {0.0, 1.0, 0.0}; }
Vec3 unit_z() { return {0.0, 0.0, 1.0}; }

Mat3 rotation_matrix(const Vec3& axis, int angle_deg) {
  if (angle_deg < -kMaxAugmentAngleDeg || angle_deg > kMaxAugmentAngleDeg) {
    throw Error(Errc::range, "rotation angle " + std::to_string(angle_deg) +
                                 " outside [-15, 15] degrees");
  }
  if (axis != unit_x() && axis != unit_y() && axis != unit_z()) {
    throw Error(Errc::domain, "rotation axis must be one of x, y, z unit vectors");
  }
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double s = std::sin(theta);
  const double c = 1.0 - std::cos(theta);
  const auto [kx, ky, kz] = axis;

  // R = I + sin(θ) [k]x + (1 - cos(θ)) [k]x²
  const Mat3 k{{{0.0, -kz, ky}, {kz, 0.0, -kx}, {-ky, kx, 0.0}}};
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double k2 = 0.0;
      for (int m = 0; m < 3; ++m) k2 += k[i][m] * k[m][j];
      r[i][j] = (i == j ? 1.0 : 0.0) + s * k[i][j] + c * k2;
    }
  }
  return r;
}

Vec3 apply(const Mat3& r, const Vec3& v) {
  return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
          r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
          r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

KeypointFrame rotate_frame(const KeypointFrame& frame, const Mat3& r) {
  KeypointFrame out;
  out.joints.reserve(frame.joints.size());
  for (const auto& j : frame.joints) {
    for (double v : j) {
      if (!std::isfinite(v)) {
        throw Error(Errc::domain, "frame contains a non-finite coordinate");
      }
    }
    out.joints.push_back(apply(r, j));
  }
  return out;
}

ActionClip rotate_clip(const ActionClip& clip, const Mat3& r) {
  ActionClip out{clip.values, clip.label};
  for (std::size_t i = 0; i + 2 < out.values.size(); i += 3) {
    const Vec3 v = apply(r, {clip.values[i], clip.values[i + 1], clip.values[i + 2]});
    out.values[i] = static_cast<float>(v[0]);
    out.values[i + 1] = static_cast<float>(v[1]);
    out.values[i + 2] = static_cast<float>(v[2]);
  }
  return out;
}

Dataset augment_dataset(const Dataset& ds, int per_clip, std::uint64_t seed) {
  if (per_clip < 0) throw Error(Errc::range, "per_clip must be >= 0");
  Dataset out = ds;
  out.clips.reserve(ds.clips.size() * (1 + static_cast<std::size_t>(per_clip)));
  const std::array<Vec3, 3> axes{unit_x(), unit_y(), unit_z()};
  Rng rng(mix_seed(seed, 0xa06));
  std::uniform_int_distribution<int> pick_axis(0, 2);
  std::uniform_int_distribution<int> pick_angle(-kMaxAugmentAngleDeg,
                                                kMaxAugmentAngleDeg);
  for (const auto& clip : ds.clips) {
    for (int k = 0; k < per_clip; ++k) {
      const auto& axis = axes[pick_axis(rng)];
      const int angle = pick_angle(rng);
      out.clips.push_back(rotate_clip(clip, rotation_matrix(axis, angle)));
    }
  }
  return out;
}

}  // namespace fedgest::data
