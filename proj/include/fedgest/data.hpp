#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedgest::data {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr int kDefaultJoints = 33;
inline constexpr int kDefaultWindow = 60;
inline constexpr int kDefaultClasses = 13;
inline constexpr int kMaxAugmentAngleDeg = 15;

/// One pose sample: K joints, each an (x, y, z) world coordinate.
struct KeypointFrame {
  std::vector<Vec3> joints;

  int joint_count() const noexcept { return static_cast<int>(joints.size()); }
  bool operator==(const KeypointFrame&) const = default;
};

struct ActionClass {
  int id = 0;
  std::string name;
  bool operator==(const ActionClass&) const = default;
};

/// Fixed-length window of frames with a class label.
///
/// Coordinates are stored flat as float32 in (frame, joint, xyz) order, which
/// is exactly the (W, 3K) row-major matrix fed to the model.
struct ActionClip {
  std::vector<float> values;
  int label = 0;

  std::span<const float> row(int t, int width) const {
    return std::span<const float>(values).subspan(
        static_cast<std::size_t>(t) * width, static_cast<std::size_t>(width));
  }
  bool operator==(const ActionClip&) const = default;
};

struct Dataset {
  int joints = kDefaultJoints;
  int window = kDefaultWindow;
  std::vector<ActionClass> classes;
  std::vector<ActionClip> clips;

  int feature_width() const noexcept { return 3 * joints; }
  int class_count() const noexcept { return static_cast<int>(classes.size()); }
  std::size_t clip_values() const noexcept {
    return static_cast<std::size_t>(window) * feature_width();
  }
  std::size_t size() const noexcept { return clips.size(); }
  bool empty() const noexcept { return clips.empty(); }

  /// Same dimensions and class table, no clips.
  Dataset empty_like() const { return Dataset{joints, window, classes, {}}; }
  std::vector<std::size_t> class_histogram() const;
  KeypointFrame frame(std::size_t clip, int t) const;

  /// Throws Errc::dimension / Errc::domain when a clip breaks the invariants.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

/// Per-feature min/max over the 3K flattened coordinates.
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t features() const noexcept { return min.size(); }
  bool operator==(const ScalerParams&) const = default;
};

// ---------------------------------------------------------------------------
// Rotation augmentation

Vec3 unit_x();
Vec3 unit_y();
Vec3 unit_z();

/// Proper rotation about a canonical axis by an integer number of degrees in
/// [-15, 15], built with Rodrigues' formula. Throws Errc::range for angles
/// outside the window and Errc::domain for anything but x̂, ŷ or ẑ.
Mat3 rotation_matrix(const Vec3& axis, int angle_deg);

Vec3 apply(const Mat3& r, const Vec3& v);
KeypointFrame rotate_frame(const KeypointFrame& frame, const Mat3& r);
ActionClip rotate_clip(const ActionClip& clip, const Mat3& r);

/// Originals first, then `per_clip` rotated copies of each clip (axis uniform
/// over x̂/ŷ/ẑ, integer angle uniform over [-15, 15]).
Dataset augment_dataset(const Dataset& ds, int per_clip, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Min-max scaling

ScalerParams fit_scaler(const Dataset& ds);
/// (v - min) / (max - min); constant features map to 0. Values outside the
/// fitted range extrapolate linearly.
Dataset apply_scaler(const Dataset& ds, const ScalerParams& s);
void apply_scaler_inplace(std::span<float> clip_values, const ScalerParams& s);
Dataset inverse_scaler(const Dataset& ds, const ScalerParams& s);

// ---------------------------------------------------------------------------
// Client partitioning

/// Stratified split into `n_clients` partitions whose union is `ds`.
///
/// Every clip is first dealt to exactly one home partition (class by class,
/// round-robin). Each client then also receives round(overlap_fraction * m)
/// of the m clips homed elsewhere, drawn per class, so 0 gives disjoint
/// partitions and 1 gives every client the whole dataset.
std::vector<Dataset> partition(const Dataset& ds, int n_clients,
                               double overlap_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticConfig {
  int classes = kDefaultClasses;
  int clips_per_class = 6;
  int joints = kDefaultJoints;
  int window = kDefaultWindow;
  double noise = 0.01;
  std::uint64_t seed = 1;
};

/// Names of the 13 UAV command actions; classes beyond 13 get "class_<id>".
std::vector<ActionClass> default_classes(int count);

/// Each class is a fixed parametric limb-motion family over a fixed skeleton
/// (depends only on the class id and K); the seed drives per-clip phase,
/// amplitude, body scale, placement and additive Gaussian noise.
Dataset generate_synthetic(const SyntheticConfig& cfg);

/// One clip of class `label` drawn from the synthetic family, using `rng_seed`
/// for the per-clip variation. Used to script replay logs.
ActionClip synthetic_clip(int label, int joints, int window, double noise,
                          std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// FGD1 dataset file

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fedgest::data
