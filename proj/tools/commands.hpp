#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "fedgest/checkpoint.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/pipeline.hpp"
#include "fedgest/training.hpp"

namespace fedgest::cli {

struct Context {
  ExperimentConfig config;
  std::string out_dir = "out";

  std::string path(const std::string& name) const;
};

struct GenOptions {
  std::optional<int> augment;
  // Comma-separated action names; when set, also writes a replay log.
  std::string log_sequence;
  int windows_per_action = 3;
  std::string log_name = "replay.jsonl";
};

struct GenResult {
  data::Dataset train;
  data::Dataset test;
  std::string train_path;
  std::string test_path;
  std::optional<std::string> log_path;
};

GenResult cmd_gen(const Context& ctx, const GenOptions& opts = {});

struct TrainResult {
  training::TrainReport report;
  model::Checkpoint checkpoint;
  std::string checkpoint_path;
};

TrainResult cmd_train(const Context& ctx, const std::string& dataset_path);

enum class FedMode { local, server, client };

struct FederateOptions {
  FedMode mode = FedMode::local;
  std::string dataset_path;
  std::string test_path;  // optional held-out set for per-round evaluation
  std::string endpoint;   // empty: $FEDGEST_ENDPOINT, then the config value
  int client_id = 0;
};

struct FederateResult {
  std::optional<federation::FedResult> fed;  // absent in client mode
  std::optional<std::string> checkpoint_path;
  int rounds_trained = 0;  // client mode
};

FederateResult cmd_federate(const Context& ctx, const FederateOptions& opts);

nlohmann::json cmd_eval(const Context& ctx, const std::string& checkpoint_path,
                        const std::string& dataset_path);

struct ReplayOutput {
  pipeline::ReplayResult result;
  std::string events_path;
  std::string report_path;
};

ReplayOutput cmd_replay(const Context& ctx, const std::string& checkpoint_path,
                        const std::string& log_path);

/// Summarizes a rounds.json file: per-round table plus the first round
/// whose accuracy is within `tolerance` of the last.
std::string cmd_report(const Context& ctx, const std::string& rounds_path,
                       double tolerance = 0.02);

/// Scaler from the global dataset, applied to a copy.
data::Dataset scaled(const data::Dataset& ds, const data::ScalerParams& s);

/// Builds a JSON-lines log with `windows` consecutive synthetic clips per
/// named action from observer 0.
std::string craft_log(const ExperimentConfig& cfg, const std::vector<std::string>& actions,
                      int windows);

std::vector<std::string> split_list(const std::string& s);

}  // namespace fedgest::cli
