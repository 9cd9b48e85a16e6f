#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fedgest/data.hpp"
#include "fedgest/error.hpp"
#include "fedgest/rng.hpp"

namespace fedgest::data {

namespace {

constexpr std::uint64_t kSkeletonSeed = 0x5ce1e7011ULL;
constexpr std::uint64_t kFamilySeed = 0xc1a55f0a1ULL;
constexpr int kLimbs = 4;
constexpr double kOffset = 0.6;
constexpr double kAmplitude = 0.5;

// Ids of the two static gestures in the default class table.
constexpr int kHoverId = 2;
constexpr int kLandId = 3;

// Class pair that traces the same single-axis path at 1 vs 3 cycles per
// window. With a shared phase every frame of the faster clip also occurs in
// the slower one, so no per-frame classifier can tell the pair apart; only
// the temporal order can. The sweep is twice the usual amplitude.
constexpr int kTempoPairs[][2] = {{7, 8}};
constexpr double kFastCycles = 3.0;

struct Skeleton {
  std::vector<Vec3> base;
  std::vector<int> limb;  // 0 = torso, 1..4 = limbs
  std::vector<double> lever;
};

struct Family {
  int limb = 1;
  Vec3 offset{};
  Vec3 axis{};
  Vec3 axis2{};
  double cycles = 1.0;
  double cycles2 = 1.0;
  double amplitude = 0.0;
  double secondary = 0.5;  // weight of the axis2 component
};

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-6) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

Skeleton make_skeleton(int joints) {
  Rng rng = make_rng(kSkeletonSeed, static_cast<std::uint64_t>(joints));
  std::uniform_real_distribution<double> ux(-0.4, 0.4), uy(-0.9, 0.9),
      uz(-0.1, 0.1), lever(0.5, 1.0);
  Skeleton s;
  for (int j = 0; j < joints; ++j) {
    s.base.push_back({ux(rng), uy(rng), uz(rng)});
    s.limb.push_back(j % (kLimbs + 1));
    s.lever.push_back(lever(rng));
  }
  return s;
}

Family base_family(int label) {
  Rng rng = make_rng(kFamilySeed, static_cast<std::uint64_t>(label));
  Family f;
  f.limb = 1 + label % kLimbs;
  // Offsets spread on a Fibonacci sphere so no two classes sit close.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const int slot = label % kDefaultClasses;
  const double z = 1.0 - (2.0 * slot + 1.0) / kDefaultClasses;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 dir{r * std::cos(golden * slot), r * std::sin(golden * slot), z};
  f.offset = {kOffset * dir[0], kOffset * dir[1], kOffset * dir[2]};
  f.axis = random_unit(rng);
  f.axis2 = random_unit(rng);
  f.cycles = 1.0 + label % 3;
  f.cycles2 = 1.0 + (label / 3) % 3;
  const int base_id = label % kDefaultClasses;
  f.amplitude = (base_id == kHoverId || base_id == kLandId) ? 0.0 : kAmplitude;
  return f;
}

Family make_family(int label) {
  for (const auto& pair : kTempoPairs) {
    for (int k = 0; k < 2; ++k) {
      if (label != pair[k]) continue;
      Family f = base_family(pair[0]);
      f.cycles = k == 0 ? 1.0 : kFastCycles;
      f.secondary = 0.0;
      f.amplitude = 2.0 * kAmplitude;
      return f;
    }
  }
  return base_family(label);
}

}  // namespace

std::vector<ActionClass> default_classes(int count) {
  static const char* const kNames[kDefaultClasses] = {
      "All Clear",    "Have Command",  "Hover",        "Land",
      "Landing Direction", "Move Ahead", "Move Downward", "Move to Left",
      "Move to Right", "Move Upward",  "Not Clear",    "Slow Down",
      "Wave Off"};
  std::vector<ActionClass> out;
  for (int c = 0; c < count; ++c) {
    out.push_back({c, c < kDefaultClasses ? std::string(kNames[c])
                                          : "class_" + std::to_string(c)});
  }
  return out;
}

ActionClip synthetic_clip(int label, int joints, int window, double noise,
                          std::uint64_t rng_seed) {
  const Skeleton sk = make_skeleton(joints);
  const Family fam = make_family(label);
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> phase_d(0.0, 2.0 * std::numbers::pi),
      amp_d(0.8, 1.2), scale_d(0.95, 1.05), shift_d(-0.05, 0.05);
  std::normal_distribution<double> noise_d(0.0, 1.0);

  const double phase = phase_d(rng);
  const double amp = fam.amplitude * amp_d(rng);
  const double scale = scale_d(rng);
  const Vec3 shift{shift_d(rng), shift_d(rng), shift_d(rng)};

  ActionClip clip;
  clip.label = label;
  clip.values.reserve(static_cast<std::size_t>(window) * joints * 3);
  for (int t = 0; t < window; ++t) {
    const double s = 2.0 * std::numbers::pi * t / window;
    const double a1 = amp * std::sin(fam.cycles * s + phase);
    const double a2 = fam.secondary * amp * std::sin(fam.cycles2 * s + phase + std::numbers::pi / 2);
    for (int j = 0; j < joints; ++j) {
      for (int d = 0; d < 3; ++d) {
        double v = scale * sk.base[j][d] + shift[d];
        if (sk.limb[j] == fam.limb) {
          v += sk.lever[j] * (fam.offset[d] + a1 * fam.axis[d] + a2 * fam.axis2[d]);
        }
        if (noise > 0.0) v += noise * noise_d(rng);
        clip.values.push_back(static_cast<float>(v));
      }
    }
  }
  return clip;
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.classes < 1 || cfg.clips_per_class < 1 || cfg.joints < 1 || cfg.window < 1) {
    throw Error(Errc::range, "synthetic dataset counts must all be >= 1");
  }
  if (cfg.noise < 0.0) throw Error(Errc::range, "noise level must be >= 0");
  Dataset ds;
  ds.joints = cfg.joints;
  ds.window = cfg.window;
  ds.classes = default_classes(cfg.classes);
  for (int c = 0; c < cfg.classes; ++c) {
    for (int i = 0; i < cfg.clips_per_class; ++i) {
      const auto stream = static_cast<std::uint64_t>(c) * cfg.clips_per_class + i;
      ds.clips.push_back(synthetic_clip(c, cfg.joints, cfg.window, cfg.noise,
                                        mix_seed(cfg.seed, stream)));
    }
  }
  return ds;
}

}  // namespace fedgest::data
