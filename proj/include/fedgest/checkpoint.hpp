#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedgest/data.hpp"
#include "fedgest/model.hpp"

namespace fedgest::model {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Contents of an FGM1 file.
///
/// Layout (little-endian): "FGM1", version u16, ModelConfig (input_width,
/// window, lstm1, lstm2, dense1 as u32, dropout f64, dense2, classes as u32,
/// init_seed u64), flat length u32, flatten() as float32, metadata block
/// (scaler feature count u32 then min[] and max[] as f64; class-name count
/// u16 then u16-length-prefixed UTF-8 names), CRC32 of all preceding bytes.
struct Checkpoint {
  ModelParams params;
  std::optional<data::ScalerParams> scaler;
  std::vector<std::string> class_names;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fedgest::model
