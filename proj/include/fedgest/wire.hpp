#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedgest::wire {

inline constexpr std::uint16_t kProtocolVersion = 1;
// Frames above this size are rejected before any allocation.
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

enum class MsgType : std::uint8_t {
  hello = 1,
  hello_ack = 2,
  global_params = 3,
  train_request = 4,
  client_update = 5,
  round_done = 6,
  shutdown = 7,
  error = 8,
};

std::string_view to_string(MsgType t) noexcept;

/// Frame: u32 payload length | u8 type | payload | u32 CRC32(type, payload).
/// All integers little-endian.
struct Frame {
  MsgType type{};
  std::vector<std::uint8_t> payload;
};

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::size_t kTrailerSize = 4;

std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Parses one complete frame. Throws truncated, checksum or protocol errors;
/// trailing bytes are an error too.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Reads the payload length and type from a 5-byte header.
struct Header {
  std::uint32_t length = 0;
  MsgType type{};
};
Header decode_header(std::span<const std::uint8_t, kHeaderSize> bytes);

// ---------------------------------------------------------------------------
// Message payloads

struct Hello {
  std::uint16_t version = kProtocolVersion;
  std::uint32_t client_id = 0;
};

struct HelloAck {
  std::uint16_t version = kProtocolVersion;
  std::uint32_t flat_length = 0;
};

struct GlobalParams {
  std::uint32_t round = 0;
  std::vector<float> params;
};

struct TrainRequest {
  std::uint32_t round = 0;
};

/// Round, flat length, float32 params, n_k, then final local loss f64,
/// accuracy f64 and epochs run u32.
struct ClientUpdateMsg {
  std::uint32_t round = 0;
  std::vector<float> params;
  std::uint32_t samples = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::uint32_t epochs = 0;
};

struct RoundDone {
  std::uint32_t round = 0;
  std::uint32_t digest = 0;
};

struct ErrorMsg {
  std::uint16_t code = 0;  // fedgest::Errc value
  std::string message;
};

Frame encode(const Hello& m);
Frame encode(const HelloAck& m);
Frame encode(const GlobalParams& m);
Frame encode(const TrainRequest& m);
Frame encode(const ClientUpdateMsg& m);
Frame encode(const RoundDone& m);
Frame encode(const ErrorMsg& m);
Frame shutdown_frame();

// Each decoder checks the frame type and that the payload is consumed exactly.
Hello decode_hello(const Frame& f);
HelloAck decode_hello_ack(const Frame& f);
GlobalParams decode_global_params(const Frame& f);
TrainRequest decode_train_request(const Frame& f);
ClientUpdateMsg decode_client_update(const Frame& f);
RoundDone decode_round_done(const Frame& f);
ErrorMsg decode_error(const Frame& f);

}  // namespace fedgest::wire
