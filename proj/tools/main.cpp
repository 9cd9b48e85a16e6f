#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "fedgest/error.hpp"

using namespace fedgest;

int main(int argc, char** argv) {
  CLI::App app{"Federated LSTM training for skeleton gestures and a command replay pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string log_level = "info";
  app.add_option("--config", config_path, "Experiment config (YAML)");
  app.add_option("--seed", seed, "Override every section seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* gen = app.add_subcommand("gen", "Generate the synthetic dataset and held-out set");
  cli::GenOptions gen_opts;
  gen->add_option("--augment", gen_opts.augment, "Rotated copies per clip");
  gen->add_option("--log-sequence", gen_opts.log_sequence,
                  "Comma-separated actions for a crafted replay log");
  gen->add_option("--windows", gen_opts.windows_per_action, "Windows per action in the log");

  auto* train = app.add_subcommand("train", "Train a single model");
  std::string data_path = "out/dataset.fgd";
  train->add_option("--data", data_path, "Dataset file (FGD1)");

  auto* fed = app.add_subcommand("federate", "Run FedAvg locally or over TCP");
  cli::FederateOptions fed_opts;
  std::string mode = "local";
  fed->add_option("--mode", mode, "local|server|client")
      ->check(CLI::IsMember({"local", "server", "client"}));
  fed->add_option("--data", data_path, "Global dataset file (FGD1)");
  fed->add_option("--test", fed_opts.test_path, "Held-out set evaluated after each round");
  fed->add_option("--endpoint", fed_opts.endpoint, "host:port (default $FEDGEST_ENDPOINT)");
  fed->add_option("--client-id", fed_opts.client_id, "Client index in client mode");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string model_path = "out/model.fgm";
  eval->add_option("--model", model_path, "Checkpoint (FGM1)");
  eval->add_option("--data", data_path, "Dataset file (FGD1)");

  auto* rep = app.add_subcommand("replay", "Replay a keypoint log through the command pipeline");
  std::string log_path = "out/replay.jsonl";
  rep->add_option("--model", model_path, "Checkpoint (FGM1)");
  rep->add_option("--log", log_path, "JSON-lines observer log");

  auto* report = app.add_subcommand("report", "Summarize federated round records");
  std::string rounds_path = "out/rounds.json";
  report->add_option("--rounds", rounds_path, "rounds.json from federate");

  auto* show = app.add_subcommand("config", "Print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("fedgest");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    cli::Context ctx;
    if (!config_path.empty()) ctx.config = cli::load_config(config_path);
    if (seed) ctx.config.override_seed(*seed);
    ctx.out_dir = out_dir;

    if (*gen) {
      cli::cmd_gen(ctx, gen_opts);
    } else if (*train) {
      cli::cmd_train(ctx, data_path);
    } else if (*fed) {
      fed_opts.mode = mode == "server"   ? cli::FedMode::server
                      : mode == "client" ? cli::FedMode::client
                                         : cli::FedMode::local;
      fed_opts.dataset_path = data_path;
      cli::cmd_federate(ctx, fed_opts);
    } else if (*eval) {
      std::cout << cli::cmd_eval(ctx, model_path, data_path).dump(2) << '\n';
    } else if (*rep) {
      cli::cmd_replay(ctx, model_path, log_path);
    } else if (*report) {
      std::cout << cli::cmd_report(ctx, rounds_path);
    } else if (*show) {
      std::cout << cli::dump_config(ctx.config);
    }
  } catch (const Error& e) {
    spdlog::error("{} error: {}", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
