#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fedgest/data.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/model.hpp"
#include "fedgest/pipeline.hpp"
#include "fedgest/training.hpp"

namespace fedgest::cli {

struct DataSection {
  data::SyntheticConfig synthetic;  // its seed is the section seed
  int augment = 2;                  // rotated copies per clip
  int test_clips_per_class = 12;
  std::uint64_t test_seed = 99;
};

struct FederationSection {
  federation::FedConfig fed;
  double overlap = 0.0;
  std::uint64_t partition_seed = 5;
  std::string endpoint = "127.0.0.1:7070";
  // Epochs per round for each client; train.epochs is the single-client budget.
  int local_epochs = 100;
};

struct PipelineSection {
  pipeline::PipelineConfig cfg;
  std::uint64_t seed = 3;  // crafted-log generation
  std::int64_t frame_period_ms = 33;
};

/// Plain SGD settings that train the default model in reasonable time; the
/// library default rate of 1e-3 is far too slow without momentum.
inline training::TrainConfig default_train() {
  training::TrainConfig t;
  t.learning_rate = 0.1;
  t.batch_size = 4;
  return t;
}

/// Every knob of an experiment, one section per stage, each with its own seed.
struct ExperimentConfig {
  DataSection data;
  model::ModelConfig model;
  training::TrainConfig train = default_train();
  FederationSection federation;
  PipelineSection pipeline;

  void validate() const;
  /// Train settings for one federated client: `train` with the per-round budget.
  training::TrainConfig client_train() const;
  /// Replaces every section seed with `seed`.
  void override_seed(std::uint64_t seed);
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values are
/// Errc::schema errors whose message starts with "<source>:<line>:".
ExperimentConfig parse_config(const std::string& yaml, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// The defaults, serialized back to YAML.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace fedgest::cli
