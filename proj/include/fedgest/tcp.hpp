#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

#include "fedgest/federation.hpp"
#include "fedgest/wire.hpp"

namespace fedgest::tcp {

inline constexpr const char* kEndpointEnv = "FEDGEST_ENDPOINT";

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; the host part may be omitted (":7000" or "7000").
Endpoint parse_endpoint(const std::string& text);

/// Owning wrapper around a connected stream socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  void close() noexcept;

  void send_frame(const wire::Frame& f);
  /// Blocks until a whole frame arrives; a closed peer is Errc::network.
  wire::Frame recv_frame();

  static Socket connect(const Endpoint& ep, std::chrono::milliseconds retry_for);

 private:
  void send_all(const std::uint8_t* data, std::size_t n);
  void recv_all(std::uint8_t* data, std::size_t n);
  int fd_ = -1;
};

class Listener {
 public:
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  /// Actual bound port (useful with port 0).
  std::uint16_t port() const noexcept { return port_; }
  /// Waits up to `timeout` (non-positive = forever) for one connection.
  Socket accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

struct ServeOptions {
  std::chrono::milliseconds accept_timeout{120000};
  // Called once the listener is bound, before waiting for clients.
  std::function<void(std::uint16_t port)> on_listening;
  federation::RunOptions run;
};

/// Binds `ep`, admits exactly fed.clients clients (one per id, each with a
/// matching protocol version; others get ERROR and are dropped), then runs
/// the same rounds as the in-process server over the sockets.
federation::FedResult serve(const Endpoint& ep, const federation::FedConfig& fed,
                            const model::ModelConfig& mc, const ServeOptions& opts = {});

struct ClientReport {
  int rounds_trained = 0;
  std::uint32_t last_digest = 0;
};

struct ClientOptions {
  std::chrono::milliseconds connect_retry{30000};
  std::uint16_t version = wire::kProtocolVersion;  // overridable for tests
};

/// Client agent: handshake, then train whenever asked until SHUTDOWN.
ClientReport connect_client(const Endpoint& ep, int client_id, const data::Dataset& local,
                            const model::ModelConfig& mc, const training::TrainConfig& tc,
                            const ClientOptions& opts = {});

}  // namespace fedgest::tcp
