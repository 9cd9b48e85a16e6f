#include "fedgest/checkpoint.hpp"

#include "fedgest/binio.hpp"
#include "fedgest/error.hpp"

namespace fedgest::model {

namespace {
constexpr std::string_view kMagic = "FGM1";
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  const ModelConfig& cfg = ck.params.config();
  ByteWriter w;
  w.raw(kMagic);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(cfg.input_width));
  w.u32(static_cast<std::uint32_t>(cfg.window));
  w.u32(static_cast<std::uint32_t>(cfg.lstm1_units));
  w.u32(static_cast<std::uint32_t>(cfg.lstm2_units));
  w.u32(static_cast<std::uint32_t>(cfg.dense1_units));
  w.f64(cfg.dropout_rate);
  w.u32(static_cast<std::uint32_t>(cfg.dense2_units));
  w.u32(static_cast<std::uint32_t>(cfg.classes));
  w.u64(cfg.init_seed);

  const auto flat = to_float32(ck.params);
  w.u32(static_cast<std::uint32_t>(flat.size()));
  for (float v : flat) w.f32(v);

  if (ck.scaler) {
    w.u32(static_cast<std::uint32_t>(ck.scaler->features()));
    for (double v : ck.scaler->min) w.f64(v);
    for (double v : ck.scaler->max) w.f64(v);
  } else {
    w.u32(0);
  }
  w.u16(static_cast<std::uint16_t>(ck.class_names.size()));
  for (const auto& n : ck.class_names) w.str16(n);

  w.u32(crc32(w.data()));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 4) {
    throw Error(Errc::truncated, "checkpoint file too short");
  }
  ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) {
    throw Error(Errc::bad_magic, "not a checkpoint file (magic is not FGM1)");
  }
  const auto version = r.u16();
  if (version != kCheckpointVersion) {
    throw Error(Errc::bad_version,
                "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.input_width = static_cast<int>(r.u32());
  cfg.window = static_cast<int>(r.u32());
  cfg.lstm1_units = static_cast<int>(r.u32());
  cfg.lstm2_units = static_cast<int>(r.u32());
  cfg.dense1_units = static_cast<int>(r.u32());
  cfg.dropout_rate = r.f64();
  cfg.dense2_units = static_cast<int>(r.u32());
  cfg.classes = static_cast<int>(r.u32());
  cfg.init_seed = r.u64();
  cfg.validate();

  const auto n = r.u32();
  if (n != parameter_count(cfg)) {
    throw Error(Errc::dimension, "checkpoint parameter count does not match its config");
  }
  std::vector<float> flat(n);
  for (auto& v : flat) v = r.f32();

  Checkpoint ck{from_float32(cfg, flat), std::nullopt, {}};
  if (const auto features = r.u32(); features > 0) {
    data::ScalerParams s;
    s.min.resize(features);
    s.max.resize(features);
    for (auto& v : s.min) v = r.f64();
    for (auto& v : s.max) v = r.f64();
    ck.scaler = std::move(s);
  }
  const auto names = r.u16();
  for (std::uint16_t i = 0; i < names; ++i) ck.class_names.push_back(r.str16());

  const std::size_t body = r.offset();
  const auto stored = r.u32();
  if (stored != crc32(bytes.first(body))) {
    throw Error(Errc::checksum, "checkpoint CRC32 mismatch");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  write_file(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace fedgest::model
