#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <future>
#include <set>
#include <thread>

#include "../support.hpp"
#include "fedgest/error.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/tcp.hpp"
#include "fedgest/wire.hpp"

using namespace fedgest;
using namespace fedgest::federation;

namespace {

ClientUpdate update(std::vector<float> params, std::uint32_t n, int id = 0) {
  ClientUpdate u;
  u.client_id = id;
  u.params = std::move(params);
  u.samples = n;
  return u;
}

struct Setup {
  model::ModelConfig mc;
  training::TrainConfig tc;
  std::vector<data::Dataset> parts;
};

// Tiny model on tiny random data: a round takes milliseconds.
Setup tiny_setup(int clients) {
  Setup s;
  s.mc = testing::tiny_model(2, 3, 3);
  s.tc.epochs = 4;
  s.tc.batch_size = 4;
  s.tc.learning_rate = 0.05;
  const auto ds = testing::random_dataset(12 * clients, 3, 2, 3, 21);
  s.parts = data::partition(ds, clients, 0.0, 2);
  return s;
}

class FailingClient final : public ClientEndpoint {
 public:
  explicit FailingClient(int id) : id_(id) {}
  int id() const override { return id_; }
  ClientUpdate train(int, std::span<const float>) override {
    throw Error(Errc::io, "disk gone");
  }
  void shutdown() override { shut = true; }
  std::atomic<bool> shut{false};

 private:
  int id_;
};

}  // namespace

TEST_SUITE("federation") {

TEST_CASE("sample_count examples") {
  CHECK(sample_count(2, 0.5) == 1);
  CHECK(sample_count(3, 1.0) == 3);
  CHECK(sample_count(5, 0.1) == 1);
  CHECK(sample_count(3, 0.5) == 2);  // ceiling
  CHECK(sample_count(10, 0.3) == 3);  // no float creep past the integer
}

TEST_CASE("sample_clients: size, range, determinism, uniformity") {
  CHECK(sample_clients(3, 1.0, 1, 0) == std::vector<int>{0, 1, 2});
  for (int t = 0; t < 20; ++t) {
    const auto s = sample_clients(7, 0.4, 5, t);
    CHECK(s.size() == 3);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<int>(s.begin(), s.end()).size() == 3);
    for (int k : s) CHECK((k >= 0 && k < 7));
    CHECK(sample_clients(7, 0.4, 5, t) == s);
  }
  // Each of 4 clients is picked about half the time with m = 2.
  std::vector<int> hits(4, 0);
  for (int t = 0; t < 4000; ++t) {
    for (int k : sample_clients(4, 0.5, 9, t)) ++hits[k];
  }
  for (int h : hits) CHECK(std::abs(h - 2000) < 150);
  CHECK_THROWS_AS(sample_clients(0, 1.0, 1, 0), Error);
  CHECK_THROWS_AS(sample_clients(3, 0.0, 1, 0), Error);
  CHECK_THROWS_AS(sample_clients(3, 1.5, 1, 0), Error);
}

TEST_CASE("aggregate examples") {
  std::vector<ClientUpdate> u{update({0.0f}, 1), update({2.0f}, 1)};
  CHECK(aggregate(u) == std::vector<double>{1.0});
  std::vector<ClientUpdate> w{update({0.0f}, 1), update({4.0f}, 3)};
  CHECK(aggregate(w) == std::vector<double>{3.0});
  std::vector<ClientUpdate> same{update({0.25f, -1.5f}, 2), update({0.25f, -1.5f}, 7),
                                 update({0.25f, -1.5f}, 1)};
  CHECK(aggregate(same) == std::vector<double>{0.25, -1.5});
}

TEST_CASE("aggregate errors") {
  CHECK_THROWS_AS(aggregate(std::span<const ClientUpdate>{}), Error);
  std::vector<ClientUpdate> ragged{update({1.0f, 2.0f}, 1), update({1.0f}, 1)};
  try {
    aggregate(ragged);
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension);
  }
  std::vector<ClientUpdate> zero{update({1.0f}, 0)};
  CHECK_THROWS_AS(aggregate(zero), Error);
}

TEST_CASE("aggregate: convex, permutation invariant, serial == OpenMP") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 5)(rng);
    const int len = std::uniform_int_distribution<int>(1, 1000)(rng);
    std::vector<ClientUpdate> ups;
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (int i = 0; i < k; ++i) {
      std::vector<float> p(len);
      for (auto& v : p) v = n(rng);
      ups.push_back(update(p, std::uniform_int_distribution<std::uint32_t>(1, 500)(rng), i));
    }
    const auto a = aggregate(ups, 3);
    CHECK(a == aggregate_serial(ups));
    for (int j = 0; j < len; ++j) {
      float lo = ups[0].params[j], hi = lo;
      for (const auto& u : ups) {
        lo = std::min(lo, u.params[j]);
        hi = std::max(hi, u.params[j]);
      }
      REQUIRE(a[j] >= lo - 1e-12);
      REQUIRE(a[j] <= hi + 1e-12);
    }
    auto shuffled = ups;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto b = aggregate(shuffled);
    for (int j = 0; j < len; ++j) REQUIRE(std::abs(a[j] - b[j]) <= 1e-12 * (1 + std::abs(a[j])));
  }
}

TEST_CASE("round seeds and digests") {
  CHECK(round_seed(7, 0) == 7);
  CHECK(round_seed(7, 1) != round_seed(7, 2));
  const std::vector<float> a{1.0f, 2.0f}, b{1.0f, 2.5f};
  CHECK(params_digest(a) == params_digest(a));
  CHECK(params_digest(a) != params_digest(b));
  // CRC32 of the empty string is 0.
  CHECK(params_digest(std::span<const float>{}) == 0u);
}

TEST_CASE("K = 1, T = 1 equals plain client_train from the float32 start") {
  auto s = tiny_setup(1);
  FedConfig fc;
  fc.clients = 1;
  fc.rounds = 1;
  const auto fed = run_federated(fc, s.mc, s.tc, s.parts);
  const auto plain = training::client_train(0, initial_global(s.mc), s.parts[0], s.tc);
  CHECK(model::to_float32(fed.params) == model::to_float32(plain.params));
  REQUIRE(fed.rounds.size() == 1);
  CHECK(fed.rounds[0].sampled == std::vector<int>{0});
  CHECK(fed.rounds[0].digest == params_digest(model::to_float32(plain.params)));
}

TEST_CASE("identical partitions and seeds reach the fixed point") {
  auto s = tiny_setup(1);
  const std::vector<data::Dataset> twins{s.parts[0], s.parts[0]};
  FedConfig fc;
  fc.clients = 2;
  fc.rounds = 1;
  const auto fed = run_federated(fc, s.mc, s.tc, twins);
  const auto plain = training::client_train(0, initial_global(s.mc), s.parts[0], s.tc);
  CHECK(model::to_float32(fed.params) == model::to_float32(plain.params));
}

TEST_CASE("run_federated: records, weights and determinism") {
  auto s = tiny_setup(3);
  FedConfig fc;
  fc.rounds = 3;
  fc.fraction = 0.5;
  int calls = 0;
  RunOptions ro;
  ro.evaluate = [&](const model::ModelParams&) {
    ++calls;
    return std::optional<std::pair<double, double>>({0.5, 0.25});
  };
  const auto a = run_federated(fc, s.mc, s.tc, s.parts, ro);
  const auto b = run_federated(fc, s.mc, s.tc, s.parts, ro);
  CHECK(calls == 6);
  CHECK(a.params == b.params);
  CHECK(a.rounds == b.rounds);
  REQUIRE(a.rounds.size() == 3);
  for (const auto& r : a.rounds) {
    CHECK(r.sampled.size() == 2);
    CHECK(r.clients.size() == 2);
    double weight = 0.0, m = 0.0;
    for (const auto& c : r.clients) m += c.samples;
    for (const auto& c : r.clients) weight += c.samples / m;
    CHECK(std::abs(weight - 1.0) < 1e-12);
    CHECK(r.eval_accuracy == 0.25);
    const auto j = r.to_json();
    CHECK(j.at("round") == r.round);
    CHECK(j.at("digest").get<std::string>().size() == 8);
  }
  CHECK(a.rounds.back().digest == params_digest(model::to_float32(a.params)));
  // Params stay float32-representable.
  CHECK(model::quantize_float32(a.params) == a.params);
}

TEST_CASE("partition count must match K") {
  auto s = tiny_setup(2);
  FedConfig fc;
  fc.clients = 3;
  CHECK_THROWS_AS(run_federated(fc, s.mc, s.tc, s.parts), Error);
}

TEST_CASE("a failing client aborts the round and names the client") {
  auto s = tiny_setup(2);
  LocalClient ok(0, s.mc, s.tc, s.parts[0]);
  FailingClient bad(1);
  std::vector<ClientEndpoint*> eps{&ok, &bad};
  FedConfig fc;
  fc.clients = 2;
  fc.rounds = 2;
  try {
    run_federated(fc, s.mc, eps);
    FAIL("expected client_failed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::client_failed);
    const std::string msg = e.what();
    CHECK(msg.find("client 1") != std::string::npos);
    CHECK(msg.find("round 1") != std::string::npos);
    CHECK(msg.find("disk gone") != std::string::npos);
  }
  CHECK(bad.shut);
}

TEST_CASE("wire: every message round-trips exactly") {
  using namespace fedgest::wire;
  Rng rng(8);
  std::normal_distribution<float> n(0.0f, 3.0f);
  std::vector<float> params(1234);
  for (auto& v : params) v = n(rng);
  params[0] = -0.0f;
  params[1] = std::numeric_limits<float>::denorm_min();

  auto through = [](const Frame& f) { return decode_frame(encode_frame(f)); };

  const auto h = decode_hello(through(encode(Hello{1, 42})));
  CHECK(h.version == 1);
  CHECK(h.client_id == 42);
  const auto ack = decode_hello_ack(through(encode(HelloAck{1, 99})));
  CHECK(ack.flat_length == 99);
  const auto gp = decode_global_params(through(encode(GlobalParams{3, params})));
  CHECK(gp.round == 3);
  CHECK(std::memcmp(gp.params.data(), params.data(), params.size() * 4) == 0);
  CHECK(decode_train_request(through(encode(TrainRequest{5}))).round == 5);
  ClientUpdateMsg cu{2, params, 78, 0.125, 0.75, 40};
  const auto cu2 = decode_client_update(through(encode(cu)));
  CHECK(cu2.params == cu.params);
  CHECK(cu2.samples == 78);
  CHECK(cu2.loss == 0.125);
  CHECK(cu2.accuracy == 0.75);
  CHECK(cu2.epochs == 40);
  const auto rd = decode_round_done(through(encode(RoundDone{4, 0xdeadbeef})));
  CHECK(rd.digest == 0xdeadbeefu);
  const auto em = decode_error(through(encode(ErrorMsg{3, "no"})));
  CHECK(em.code == 3);
  CHECK(em.message == "no");
  CHECK(through(shutdown_frame()).type == MsgType::shutdown);
}

TEST_CASE("wire: framing layout and rejection") {
  using namespace fedgest::wire;
  const auto bytes = encode_frame(encode(TrainRequest{7}));
  REQUIRE(bytes.size() == kHeaderSize + 4 + kTrailerSize);
  CHECK(bytes[0] == 4);  // payload length, little-endian
  CHECK(bytes[1] == 0);
  CHECK(bytes[4] == 4);  // TRAIN_REQUEST
  CHECK(bytes[5] == 7);

  auto bad = bytes;
  bad[5] ^= 1;
  try {
    decode_frame(bad);
    FAIL("expected checksum");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::checksum);
  }
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
  try {
    decode_frame(cut);
    FAIL("expected truncated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::truncated);
  }
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_frame(longer), Error);
  // Wrong type for the decoder.
  CHECK_THROWS_AS(decode_hello(encode(TrainRequest{1})), Error);
  // Trailing payload bytes.
  auto f = encode(TrainRequest{1});
  f.payload.push_back(0);
  CHECK_THROWS_AS(decode_train_request(f), Error);
  // Oversized length rejected from the header alone.
  std::array<std::uint8_t, kHeaderSize> hdr{0xff, 0xff, 0xff, 0xff, 3};
  CHECK_THROWS_AS(decode_header(hdr), Error);
  std::array<std::uint8_t, kHeaderSize> unknown{0, 0, 0, 0, 99};
  CHECK_THROWS_AS(decode_header(unknown), Error);
}

TEST_CASE("endpoint parsing") {
  CHECK(tcp::parse_endpoint("10.0.0.2:7070").host == "10.0.0.2");
  CHECK(tcp::parse_endpoint("10.0.0.2:7070").port == 7070);
  CHECK(tcp::parse_endpoint(":81").port == 81);
  CHECK(tcp::parse_endpoint("81").host == "127.0.0.1");
  CHECK_THROWS_AS(tcp::parse_endpoint("host:"), Error);
  CHECK_THROWS_AS(tcp::parse_endpoint("host:70000"), Error);
}

TEST_CASE("TCP and in-process runs are bit-identical") {
  auto s = tiny_setup(3);
  FedConfig fc;
  fc.rounds = 2;
  const auto local = run_federated(fc, s.mc, s.tc, s.parts);

  std::promise<std::uint16_t> port;
  tcp::ServeOptions so;
  so.accept_timeout = std::chrono::milliseconds(20000);
  so.on_listening = [&](std::uint16_t p) { port.set_value(p); };
  auto server = std::async(std::launch::async, [&] {
    return tcp::serve(tcp::Endpoint{"127.0.0.1", 0}, fc, s.mc, so);
  });
  const std::uint16_t p = port.get_future().get();
  std::vector<std::future<tcp::ClientReport>> clients;
  for (int k = 0; k < 3; ++k) {
    clients.push_back(std::async(std::launch::async, [&, k] {
      return tcp::connect_client(tcp::Endpoint{"127.0.0.1", p}, k, s.parts[k], s.mc, s.tc);
    }));
  }
  const auto remote = server.get();
  for (auto& c : clients) {
    const auto r = c.get();
    CHECK(r.rounds_trained == 2);
    CHECK(r.last_digest == remote.rounds.back().digest);
  }
  CHECK(remote.params == local.params);
  CHECK(remote.rounds == local.rounds);
}

TEST_CASE("TCP handshake rejects a wrong protocol version") {
  auto s = tiny_setup(1);
  FedConfig fc;
  fc.clients = 1;
  fc.rounds = 1;
  std::promise<std::uint16_t> port;
  tcp::ServeOptions so;
  so.accept_timeout = std::chrono::milliseconds(20000);
  so.on_listening = [&](std::uint16_t p) { port.set_value(p); };
  auto server = std::async(std::launch::async, [&] {
    return tcp::serve(tcp::Endpoint{"127.0.0.1", 0}, fc, s.mc, so);
  });
  const tcp::Endpoint ep{"127.0.0.1", port.get_future().get()};
  tcp::ClientOptions wrong;
  wrong.version = wire::kProtocolVersion + 1;
  try {
    tcp::connect_client(ep, 0, s.parts[0], s.mc, s.tc, wrong);
    FAIL("expected bad_version");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::bad_version);
  }
  // The slot stays open for a well-behaved client.
  const auto ok = tcp::connect_client(ep, 0, s.parts[0], s.mc, s.tc);
  CHECK(ok.rounds_trained == 1);
  CHECK(server.get().rounds.size() == 1);
}

TEST_CASE("client with no server gets a network error") {
  auto s = tiny_setup(1);
  tcp::ClientOptions quick;
  quick.connect_retry = std::chrono::milliseconds(200);
  // Grab a free port, then close it so nothing listens there.
  std::uint16_t port = 0;
  {
    tcp::Listener l(tcp::Endpoint{"127.0.0.1", 0});
    port = l.port();
  }
  try {
    tcp::connect_client(tcp::Endpoint{"127.0.0.1", port}, 0, s.parts[0], s.mc, s.tc, quick);
    FAIL("expected network error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::network);
  }
}

}  // TEST_SUITE
