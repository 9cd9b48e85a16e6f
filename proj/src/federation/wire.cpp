#include "fedgest/wire.hpp"

#include "fedgest/binio.hpp"
#include "fedgest/error.hpp"

namespace fedgest::wire {

std::string_view to_string(MsgType t) noexcept {
  switch (t) {
    case MsgType::hello: return "HELLO";
    case MsgType::hello_ack: return "HELLO_ACK";
    case MsgType::global_params: return "GLOBAL_PARAMS";
    case MsgType::train_request: return "TRAIN_REQUEST";
    case MsgType::client_update: return "CLIENT_UPDATE";
    case MsgType::round_done: return "ROUND_DONE";
    case MsgType::shutdown: return "SHUTDOWN";
    case MsgType::error: return "ERROR";
  }
  return "UNKNOWN";
}

namespace {

bool known_type(std::uint8_t t) { return t >= 1 && t <= 8; }

std::uint32_t frame_crc(std::uint8_t type, std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> buf;
  buf.reserve(payload.size() + 1);
  buf.push_back(type);
  buf.insert(buf.end(), payload.begin(), payload.end());
  return crc32(buf);
}

void expect(const Frame& f, MsgType t) {
  if (f.type != t) {
    throw Error(Errc::protocol, "expected " + std::string(to_string(t)) + ", got " +
                                    std::string(to_string(f.type)));
  }
}

void expect_end(const ByteReader& r, MsgType t) {
  if (r.remaining() != 0) {
    throw Error(Errc::protocol, std::string(to_string(t)) + " payload has " +
                                    std::to_string(r.remaining()) + " trailing bytes");
  }
}

void put_params(ByteWriter& w, std::span<const float> params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (float v : params) w.f32(v);
}

std::vector<float> get_params(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 4 > r.remaining()) {
    throw Error(Errc::truncated, "parameter array of " + std::to_string(n) +
                                     " floats exceeds the payload");
  }
  std::vector<float> out(n);
  for (auto& v : out) v = r.f32();
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) {
    throw Error(Errc::range, "frame payload of " + std::to_string(f.payload.size()) +
                                 " bytes exceeds the limit");
  }
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.u8(static_cast<std::uint8_t>(f.type));
  w.bytes(f.payload);
  w.u32(frame_crc(static_cast<std::uint8_t>(f.type), f.payload));
  return w.take();
}

Header decode_header(std::span<const std::uint8_t, kHeaderSize> bytes) {
  ByteReader r(bytes);
  Header h;
  h.length = r.u32();
  const std::uint8_t t = r.u8();
  if (!known_type(t)) {
    throw Error(Errc::protocol, "unknown message type " + std::to_string(t));
  }
  if (h.length > kMaxPayload) {
    throw Error(Errc::protocol, "frame length " + std::to_string(h.length) +
                                    " exceeds the limit");
  }
  h.type = static_cast<MsgType>(t);
  return h;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize + kTrailerSize) {
    throw Error(Errc::truncated, "frame shorter than header and trailer");
  }
  const Header h = decode_header(bytes.first<kHeaderSize>());
  const std::size_t total = kHeaderSize + h.length + kTrailerSize;
  if (bytes.size() < total) throw Error(Errc::truncated, "frame payload truncated");
  if (bytes.size() > total) {
    throw Error(Errc::protocol, std::to_string(bytes.size() - total) +
                                    " bytes after the frame trailer");
  }
  Frame f{h.type, {bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + h.length}};
  ByteReader tail(bytes.subspan(kHeaderSize + h.length));
  if (tail.u32() != frame_crc(static_cast<std::uint8_t>(f.type), f.payload)) {
    throw Error(Errc::checksum, std::string(to_string(f.type)) + " frame fails its CRC32 check");
  }
  return f;
}

Frame encode(const Hello& m) {
  ByteWriter w;
  w.u16(m.version);
  w.u32(m.client_id);
  return {MsgType::hello, w.take()};
}

Frame encode(const HelloAck& m) {
  ByteWriter w;
  w.u16(m.version);
  w.u32(m.flat_length);
  return {MsgType::hello_ack, w.take()};
}

Frame encode(const GlobalParams& m) {
  ByteWriter w;
  w.u32(m.round);
  put_params(w, m.params);
  return {MsgType::global_params, w.take()};
}

Frame encode(const TrainRequest& m) {
  ByteWriter w;
  w.u32(m.round);
  return {MsgType::train_request, w.take()};
}

Frame encode(const ClientUpdateMsg& m) {
  ByteWriter w;
  w.u32(m.round);
  put_params(w, m.params);
  w.u32(m.samples);
  w.f64(m.loss);
  w.f64(m.accuracy);
  w.u32(m.epochs);
  return {MsgType::client_update, w.take()};
}

Frame encode(const RoundDone& m) {
  ByteWriter w;
  w.u32(m.round);
  w.u32(m.digest);
  return {MsgType::round_done, w.take()};
}

Frame encode(const ErrorMsg& m) {
  ByteWriter w;
  w.u16(m.code);
  w.str16(m.message.size() > 0xffff ? m.message.substr(0, 0xffff) : m.message);
  return {MsgType::error, w.take()};
}

Frame shutdown_frame() { return {MsgType::shutdown, {}}; }

Hello decode_hello(const Frame& f) {
  expect(f, MsgType::hello);
  ByteReader r(f.payload);
  Hello m;
  m.version = r.u16();
  m.client_id = r.u32();
  expect_end(r, f.type);
  return m;
}

HelloAck decode_hello_ack(const Frame& f) {
  expect(f, MsgType::hello_ack);
  ByteReader r(f.payload);
  HelloAck m;
  m.version = r.u16();
  m.flat_length = r.u32();
  expect_end(r, f.type);
  return m;
}

GlobalParams decode_global_params(const Frame& f) {
  expect(f, MsgType::global_params);
  ByteReader r(f.payload);
  GlobalParams m;
  m.round = r.u32();
  m.params = get_params(r);
  expect_end(r, f.type);
  return m;
}

TrainRequest decode_train_request(const Frame& f) {
  expect(f, MsgType::train_request);
  ByteReader r(f.payload);
  TrainRequest m;
  m.round = r.u32();
  expect_end(r, f.type);
  return m;
}

ClientUpdateMsg decode_client_update(const Frame& f) {
  expect(f, MsgType::client_update);
  ByteReader r(f.payload);
  ClientUpdateMsg m;
  m.round = r.u32();
  m.params = get_params(r);
  m.samples = r.u32();
  m.loss = r.f64();
  m.accuracy = r.f64();
  m.epochs = r.u32();
  expect_end(r, f.type);
  return m;
}

RoundDone decode_round_done(const Frame& f) {
  expect(f, MsgType::round_done);
  ByteReader r(f.payload);
  RoundDone m;
  m.round = r.u32();
  m.digest = r.u32();
  expect_end(r, f.type);
  return m;
}

ErrorMsg decode_error(const Frame& f) {
  expect(f, MsgType::error);
  ByteReader r(f.payload);
  ErrorMsg m;
  m.code = r.u16();
  m.message = r.str16();
  expect_end(r, f.type);
  return m;
}

}  // namespace fedgest::wire
