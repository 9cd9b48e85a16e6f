#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "../../tools/commands.hpp"
#include "../../tools/config.hpp"
#include "fedgest/checkpoint.hpp"
#include "fedgest/error.hpp"
#include "fedgest/tcp.hpp"

using namespace fedgest;
using namespace fedgest::cli;
namespace fs = std::filesystem;

namespace {

// Reduced experiment: 5 joints, 20 frames, trains in seconds.
const char* kSmall = R"(
data:
  classes: 13
  clips_per_class: 4
  joints: 5
  window: 20
  augment: 0
  test_clips_per_class: 2
train:
  epochs: 500
  batch_size: 4
  plateau_patience: 20
federation:
  clients: 2
  rounds: 2
)";

Context context(const std::string& name, const std::string& yaml = kSmall) {
  Context ctx;
  ctx.config = parse_config(yaml, name + ".yaml");
  ctx.out_dir = (fs::temp_directory_path() / ("fedgest_cli_" + name)).string();
  fs::remove_all(ctx.out_dir);
  return ctx;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Errc schema_code(const std::string& yaml, std::string* msg = nullptr) {
  try {
    parse_config(yaml, "cfg.yaml");
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  FAIL("config was accepted");
  return Errc::io;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("empty document gives the defaults") {
  const auto c = parse_config("");
  CHECK(c.data.synthetic.clips_per_class == 6);
  CHECK(c.model.input_width == 99);
  CHECK(c.federation.fed.rounds == 5);
  CHECK(c.pipeline.cfg.wait_window_ms == 10000);
  // Defaults survive a dump/parse cycle.
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));
}

TEST_CASE("schema errors carry source and line") {
  std::string msg;
  CHECK(schema_code("data:\n  clips: 3\n", &msg) == Errc::schema);
  CHECK(msg.find("cfg.yaml:2") != std::string::npos);
  CHECK(msg.find("data.clips") != std::string::npos);
  CHECK(schema_code("extras:\n  a: 1\n", &msg) == Errc::schema);
  CHECK(msg.find("unknown section") != std::string::npos);
  CHECK(schema_code("train:\n  epochs: many\n", &msg) == Errc::schema);
  CHECK(msg.find("cfg.yaml:2") != std::string::npos);
  CHECK(schema_code("train:\n  epochs: 0\n") == Errc::schema);
  CHECK(schema_code("model:\n  input_width: 12\n") == Errc::schema);
  CHECK(schema_code("pipeline:\n  filter_mode: median\n") == Errc::schema);
  CHECK(schema_code("data: [1, 2\n") == Errc::schema);
}

TEST_CASE("dependent dimensions follow the data section") {
  const auto c = parse_config("data:\n  joints: 18\n  window: 30\n  classes: 5\n");
  CHECK(c.model.input_width == 54);
  CHECK(c.model.window == 30);
  CHECK(c.model.classes == 5);
  CHECK(c.pipeline.cfg.joints == 18);
  CHECK(c.pipeline.cfg.window == 30);
}

TEST_CASE("seed override touches every section") {
  auto c = parse_config("");
  c.override_seed(1234);
  CHECK(c.data.synthetic.seed == 1234);
  CHECK(c.model.init_seed == 1234);
  CHECK(c.train.seed == 1234);
  CHECK(c.federation.fed.seed == 1234);
  CHECK(c.pipeline.seed == 1234);
}

TEST_CASE("gen: default config gives 78 clips, augment 2 triples them") {
  auto ctx = context("gen", "");
  GenOptions none;
  none.augment = 0;
  const auto r = cmd_gen(ctx, none);
  CHECK(r.train.size() == 78);
  CHECK(data::load_dataset(r.train_path).size() == 78);
  CHECK(r.test.size() == 13 * 12);
  const auto aug = cmd_gen(ctx);
  CHECK(aug.train.size() == 234);
  GenOptions bad;
  bad.augment = -1;
  CHECK_THROWS_AS(cmd_gen(ctx, bad), Error);
  fs::remove_all(ctx.out_dir);
}

TEST_CASE("train, eval and replay on the reduced experiment") {
  auto ctx = context("train");
  GenOptions go;
  go.log_sequence = "Hover, Have Command, Move to Left";
  const auto gen = cmd_gen(ctx, go);
  REQUIRE(gen.log_path);

  const auto tr = cmd_train(ctx, gen.train_path);
  CHECK(fs::exists(ctx.path("train_report.json")));
  CHECK(fs::exists(ctx.path("train_curves.csv")));
  const auto first = slurp(tr.checkpoint_path);
  cmd_train(ctx, gen.train_path);
  CHECK(slurp(tr.checkpoint_path) == first);

  const auto ev = cmd_eval(ctx, tr.checkpoint_path, gen.train_path);
  CHECK(ev.at("accuracy").get<double>() >= tr.report.final_accuracy - 1e-9);
  const auto& rows = ev.at("confusion_matrix");
  for (std::size_t c = 0; c < rows.size(); ++c) {
    std::size_t sum = 0;
    for (const auto& v : rows[c]) sum += v.get<std::size_t>();
    CHECK(sum == 4);
  }
  CHECK(fs::exists(ctx.path("confusion.csv")));

  const auto rep = cmd_replay(ctx, tr.checkpoint_path, *gen.log_path);
  REQUIRE(rep.result.events.size() == 1);
  CHECK(rep.result.events[0].command == "MOVE_TO_LEFT");
  CHECK(rep.result.decisions.at("gate_opened") == 1);
  CHECK(rep.result.modeled_response_ms == 10400);
  const auto report = nlohmann::json::parse(slurp(rep.report_path));
  CHECK(report.at("modeled_response_ms") == 10400);

  // Same log without the gate action: nothing is emitted.
  GenOptions nogate;
  nogate.log_sequence = "Hover, Move to Left, Move to Right";
  nogate.log_name = "nogate.jsonl";
  const auto g2 = cmd_gen(ctx, nogate);
  CHECK(cmd_replay(ctx, tr.checkpoint_path, *g2.log_path).result.events.empty());
  fs::remove_all(ctx.out_dir);
}

TEST_CASE("mismatched joints and empty datasets are reported") {
  auto ctx = context("mismatch");
  const auto gen = cmd_gen(ctx);
  auto other = ctx;
  other.config = parse_config("data:\n  joints: 6\n  window: 20\n");
  try {
    cmd_train(other, gen.train_path);
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension);
  }
  const auto empty_path = ctx.path("empty.fgd");
  data::save_dataset(gen.train.empty_like(), empty_path);
  auto quick = ctx;
  quick.config.train.epochs = 1;
  const auto tr = cmd_train(quick, gen.train_path);
  try {
    cmd_eval(ctx, tr.checkpoint_path, empty_path);
    FAIL("expected empty error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty);
  }
  fs::remove_all(ctx.out_dir);
}

TEST_CASE("federate: server plus clients reproduce the local checkpoint") {
  auto ctx = context("federate");
  ctx.config.federation.local_epochs = 5;
  const auto gen = cmd_gen(ctx);

  FederateOptions local;
  local.dataset_path = gen.train_path;
  local.test_path = gen.test_path;
  const auto a = cmd_federate(ctx, local);
  REQUIRE(a.checkpoint_path);
  const auto local_bytes = slurp(*a.checkpoint_path);
  CHECK(fs::exists(ctx.path("rounds.json")));
  CHECK(fs::exists(ctx.path("rounds.csv")));
  CHECK(a.fed->rounds.back().eval_accuracy.has_value());

  const auto md = cmd_report(ctx, ctx.path("rounds.json"));
  CHECK(md.find("| 2 |") != std::string::npos);

  // Pick a free port for the server.
  std::uint16_t port = 0;
  {
    tcp::Listener l(tcp::Endpoint{"127.0.0.1", 0});
    port = l.port();
  }
  const std::string ep = "127.0.0.1:" + std::to_string(port);
  auto server_ctx = ctx;
  server_ctx.out_dir += "_server";
  FederateOptions srv = local;
  srv.mode = FedMode::server;
  srv.endpoint = ep;
  auto server = std::async(std::launch::async, [&] { return cmd_federate(server_ctx, srv); });
  std::vector<std::future<FederateResult>> clients;
  for (int k = 0; k < 2; ++k) {
    FederateOptions co = local;
    co.mode = FedMode::client;
    co.endpoint = ep;
    co.client_id = k;
    clients.push_back(std::async(std::launch::async, [&, co] { return cmd_federate(ctx, co); }));
  }
  for (auto& c : clients) CHECK(c.get().rounds_trained == 2);
  const auto b = server.get();
  CHECK(slurp(*b.checkpoint_path) == local_bytes);
  CHECK(slurp(server_ctx.path("rounds.json")) == slurp(ctx.path("rounds.json")));

  FederateOptions bad = local;
  bad.mode = FedMode::client;
  bad.client_id = 5;
  CHECK_THROWS_AS(cmd_federate(ctx, bad), Error);
  fs::remove_all(ctx.out_dir);
  fs::remove_all(server_ctx.out_dir);
}

TEST_CASE("helpers") {
  CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
  const auto cfg = parse_config(kSmall);
  const auto log = craft_log(cfg, {"Hover"}, 2);
  CHECK(std::count(log.begin(), log.end(), '\n') == 40);
  CHECK_THROWS_AS(craft_log(cfg, {"Somersault"}, 1), Error);
}

}  // TEST_SUITE
