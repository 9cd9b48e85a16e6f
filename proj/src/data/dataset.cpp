#include <cmath>
#include <string>

#include "fedgest/binio.hpp"
#include "fedgest/data.hpp"
#include "fedgest/error.hpp"

namespace fedgest::data {

namespace {
constexpr std::string_view kDatasetMagic = "FGD1";
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> hist(classes.size(), 0);
  for (const auto& clip : clips) {
    hist.at(static_cast<std::size_t>(clip.label))++;
  }
  return hist;
}

KeypointFrame Dataset::frame(std::size_t clip, int t) const {
  const auto row = clips.at(clip).row(t, feature_width());
  KeypointFrame f;
  f.joints.resize(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    f.joints[j] = {row[3 * j], row[3 * j + 1], row[3 * j + 2]};
  }
  return f;
}

void Dataset::validate() const {
  if (joints < 1 || window < 1) {
    throw Error(Errc::dimension, "dataset dimensions must be positive");
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].id != static_cast<int>(c)) {
      throw Error(Errc::domain, "class ids must be dense 0..C-1");
    }
  }
  const std::size_t n = clip_values();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& clip = clips[i];
    if (clip.values.size() != n) {
      throw Error(Errc::dimension,
                  "clip " + std::to_string(i) + " has " +
                      std::to_string(clip.values.size()) + " values, expected " +
                      std::to_string(n));
    }
    if (clip.label < 0 || clip.label >= class_count()) {
      throw Error(Errc::domain, "clip " + std::to_string(i) +
                                    " label outside the class set");
    }
    for (float v : clip.values) {
      if (!std::isfinite(v)) {
        throw Error(Errc::domain,
                    "clip " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
  }
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ds.validate();
  if (ds.joints > 0xffff || ds.window > 0xffff || ds.classes.size() > 0xffff) {
    throw Error(Errc::range, "dataset dimensions exceed the u16 header fields");
  }
  ByteWriter w;
  w.raw(kDatasetMagic);
  w.u16(kDatasetFormatVersion);
  w.u16(static_cast<std::uint16_t>(ds.joints));
  w.u16(static_cast<std::uint16_t>(ds.window));
  w.u16(static_cast<std::uint16_t>(ds.classes.size()));
  w.u32(static_cast<std::uint32_t>(ds.clips.size()));
  for (const auto& c : ds.classes) w.str16(c.name);
  for (const auto& clip : ds.clips) {
    w.u16(static_cast<std::uint16_t>(clip.label));
    for (float v : clip.values) w.f32(v);
  }
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kDatasetMagic.size()) {
    throw Error(Errc::truncated, "dataset file shorter than its magic");
  }
  if (r.raw(kDatasetMagic.size()) != kDatasetMagic) {
    throw Error(Errc::bad_magic, "not a dataset file (magic is not FGD1)");
  }
  const auto version = r.u16();
  if (version != kDatasetFormatVersion) {
    throw Error(Errc::bad_version,
                "unsupported dataset format version " + std::to_string(version));
  }
  Dataset ds;
  ds.joints = r.u16();
  ds.window = r.u16();
  const auto class_count = r.u16();
  const auto clip_count = r.u32();
  for (std::uint16_t c = 0; c < class_count; ++c) {
    ds.classes.push_back({c, r.str16()});
  }
  const std::size_t n = ds.clip_values();
  if (r.remaining() < static_cast<std::size_t>(clip_count) * (2 + 4 * n)) {
    throw Error(Errc::truncated, "dataset payload truncated: header declares " +
                                     std::to_string(clip_count) + " clips");
  }
  ds.clips.resize(clip_count);
  for (auto& clip : ds.clips) {
    clip.label = r.u16();
    clip.values.resize(n);
    for (auto& v : clip.values) v = r.f32();
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::string& path) {
  return decode_dataset(read_file(path));
}

}  // namespace fedgest::data
