#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "fedgest/binio.hpp"
#include "fedgest/error.hpp"

namespace fedgest {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::range: return "range";
    case Errc::domain: return "domain";
    case Errc::dimension: return "dimension";
    case Errc::empty: return "empty";
    case Errc::bad_magic: return "bad_magic";
    case Errc::bad_version: return "bad_version";
    case Errc::truncated: return "truncated";
    case Errc::checksum: return "checksum";
    case Errc::io: return "io";
    case Errc::protocol: return "protocol";
    case Errc::schema: return "schema";
    case Errc::order: return "order";
    case Errc::network: return "network";
    case Errc::client_failed: return "client_failed";
  }
  return "unknown";
}

void ByteWriter::str16(std::string_view s) {
  if (s.size() > 0xffff) {
    throw Error(Errc::range, "string longer than 65535 bytes");
  }
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s);
}

std::string ByteReader::raw(std::size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string ByteReader::str16() { return raw(u16()); }

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < data.size()) {
    const std::size_t n = std::min<std::size_t>(data.size() - off, 1u << 30);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

}  // namespace fedgest
