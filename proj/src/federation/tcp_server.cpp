#include <sys/socket.h>
#include <sys/time.h>

#include <memory>

#include <spdlog/spdlog.h>

#include "fedgest/error.hpp"
#include "fedgest/tcp.hpp"

namespace fedgest::tcp {

namespace {

void set_recv_timeout(const Socket& s, std::chrono::milliseconds ms) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(ms.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((ms.count() % 1000) * 1000);
  setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

void reject(Socket& s, Errc code, const std::string& why) {
  spdlog::warn("rejecting client: {}", why);
  try {
    s.send_frame(wire::encode(wire::ErrorMsg{static_cast<std::uint16_t>(code), why}));
  } catch (const Error&) {
    // Peer already gone; nothing to tell it.
  }
  s.close();
}

/// Server-side stand-in for one connected client.
class RemoteClient final : public federation::ClientEndpoint {
 public:
  RemoteClient(int id, Socket s) : id_(id), sock_(std::move(s)) {}

  int id() const override { return id_; }

  federation::ClientUpdate train(int round, std::span<const float> global) override {
    const auto r = static_cast<std::uint32_t>(round);
    sock_.send_frame(wire::encode(wire::GlobalParams{r, {global.begin(), global.end()}}));
    sock_.send_frame(wire::encode(wire::TrainRequest{r}));
    const wire::Frame f = sock_.recv_frame();
    if (f.type == wire::MsgType::error) {
      const auto e = wire::decode_error(f);
      throw Error(Errc::client_failed, "client reported: " + e.message);
    }
    auto msg = wire::decode_client_update(f);
    if (msg.round != r) {
      throw Error(Errc::protocol, "update for round " + std::to_string(msg.round) +
                                      " while round " + std::to_string(r) + " is open");
    }
    federation::ClientUpdate u;
    u.client_id = id_;
    u.params = std::move(msg.params);
    u.samples = msg.samples;
    u.loss = msg.loss;
    u.accuracy = msg.accuracy;
    u.epochs = msg.epochs;
    return u;
  }

  void round_done(int round, std::uint32_t digest) override {
    sock_.send_frame(wire::encode(wire::RoundDone{static_cast<std::uint32_t>(round), digest}));
  }

  void shutdown() override {
    if (!sock_.valid()) return;
    try {
      sock_.send_frame(wire::shutdown_frame());
    } catch (const Error&) {
    }
    sock_.close();
  }

 private:
  int id_;
  Socket sock_;
};

}  // namespace

federation::FedResult serve(const Endpoint& ep, const federation::FedConfig& fed,
                            const model::ModelConfig& mc, const ServeOptions& opts) {
  fed.validate();
  mc.validate();
  Listener listener(ep);
  spdlog::info("listening on {}:{} for {} clients", ep.host, listener.port(), fed.clients);
  if (opts.on_listening) opts.on_listening(listener.port());

  const auto flat = static_cast<std::uint32_t>(model::parameter_count(mc));
  std::vector<std::unique_ptr<RemoteClient>> clients(static_cast<std::size_t>(fed.clients));
  int admitted = 0;
  const auto deadline = std::chrono::steady_clock::now() + opts.accept_timeout;
  while (admitted < fed.clients) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw Error(Errc::network, "only " + std::to_string(admitted) + " of " +
                                     std::to_string(fed.clients) + " clients connected");
    }
    Socket s = listener.accept(left);
    set_recv_timeout(s, std::chrono::milliseconds(10000));
    wire::Hello hello;
    try {
      hello = wire::decode_hello(s.recv_frame());
    } catch (const Error& e) {
      reject(s, Errc::protocol, std::string("bad handshake: ") + e.what());
      continue;
    }
    if (hello.version != wire::kProtocolVersion) {
      reject(s, Errc::bad_version,
             "protocol version " + std::to_string(hello.version) + " not supported (server speaks " +
                 std::to_string(wire::kProtocolVersion) + ")");
      continue;
    }
    if (hello.client_id >= static_cast<std::uint32_t>(fed.clients)) {
      reject(s, Errc::protocol, "client id " + std::to_string(hello.client_id) +
                                    " outside [0, " + std::to_string(fed.clients) + ")");
      continue;
    }
    auto& slot = clients[hello.client_id];
    if (slot) {
      reject(s, Errc::protocol, "client id " + std::to_string(hello.client_id) +
                                    " is already connected");
      continue;
    }
    s.send_frame(wire::encode(wire::HelloAck{wire::kProtocolVersion, flat}));
    // Training can take a while; rounds wait for clients indefinitely.
    set_recv_timeout(s, std::chrono::milliseconds(0));
    slot = std::make_unique<RemoteClient>(static_cast<int>(hello.client_id), std::move(s));
    ++admitted;
    spdlog::info("client {} connected ({}/{})", hello.client_id, admitted, fed.clients);
  }

  std::vector<federation::ClientEndpoint*> eps;
  for (auto& c : clients) eps.push_back(c.get());
  return federation::run_federated(fed, mc, eps, opts.run);
}

ClientReport connect_client(const Endpoint& ep, int client_id, const data::Dataset& local,
                            const model::ModelConfig& mc, const training::TrainConfig& tc,
                            const ClientOptions& opts) {
  if (client_id < 0) throw Error(Errc::range, "client id must be >= 0");
  Socket s = Socket::connect(ep, opts.connect_retry);
  s.send_frame(wire::encode(wire::Hello{opts.version, static_cast<std::uint32_t>(client_id)}));
  const wire::Frame ack_frame = s.recv_frame();
  if (ack_frame.type == wire::MsgType::error) {
    const auto e = wire::decode_error(ack_frame);
    const auto code = e.code == static_cast<std::uint16_t>(Errc::bad_version) ? Errc::bad_version
                                                                               : Errc::protocol;
    throw Error(code, "server rejected the handshake: " + e.message);
  }
  const auto ack = wire::decode_hello_ack(ack_frame);
  if (ack.flat_length != model::parameter_count(mc)) {
    throw Error(Errc::dimension, "server model has " + std::to_string(ack.flat_length) +
                                     " parameters, local config has " +
                                     std::to_string(model::parameter_count(mc)));
  }
  spdlog::info("client {} joined {}", client_id, ep.str());

  ClientReport report;
  std::optional<wire::GlobalParams> global;
  for (;;) {
    const wire::Frame f = s.recv_frame();
    switch (f.type) {
      case wire::MsgType::global_params:
        global = wire::decode_global_params(f);
        break;
      case wire::MsgType::train_request: {
        const auto req = wire::decode_train_request(f);
        if (!global || global->round != req.round) {
          throw Error(Errc::protocol, "TRAIN_REQUEST for round " + std::to_string(req.round) +
                                          " without matching GLOBAL_PARAMS");
        }
        federation::ClientUpdate u;
        try {
          u = federation::train_local(client_id, mc, tc, local, static_cast<int>(req.round),
                                      global->params);
        } catch (const Error& e) {
          s.send_frame(wire::encode(wire::ErrorMsg{static_cast<std::uint16_t>(e.code()), e.what()}));
          throw;
        }
        s.send_frame(wire::encode(wire::ClientUpdateMsg{req.round, std::move(u.params), u.samples,
                                                        u.loss, u.accuracy, u.epochs}));
        ++report.rounds_trained;
        break;
      }
      case wire::MsgType::round_done:
        report.last_digest = wire::decode_round_done(f).digest;
        break;
      case wire::MsgType::shutdown:
        spdlog::info("client {} done after {} rounds", client_id, report.rounds_trained);
        return report;
      case wire::MsgType::error: {
        const auto e = wire::decode_error(f);
        throw Error(Errc::protocol, "server error: " + e.message);
      }
      default:
        throw Error(Errc::protocol, "unexpected " + std::string(wire::to_string(f.type)) +
                                        " from server");
    }
  }
}

}  // namespace fedgest::tcp
