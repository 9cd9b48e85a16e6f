#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgest/data.hpp"
#include "fedgest/model.hpp"
#include "fedgest/training.hpp"

namespace fedgest::federation {

struct FedConfig {
  int clients = 3;        // K
  double fraction = 1.0;  // C
  int rounds = 5;         // T
  std::uint64_t seed = 11;

  void validate() const;
};

/// One client's reply for a round. Parameters travel as float32.
struct ClientUpdate {
  int client_id = 0;
  std::vector<float> params;
  std::uint32_t samples = 0;  // n_k
  double loss = 0.0;          // infer-mode loss of the returned weights on local data
  double accuracy = 0.0;
  std::uint32_t epochs = 0;
};

struct ClientSummary {
  int client_id = 0;
  std::uint32_t samples = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::uint32_t epochs = 0;

  bool operator==(const ClientSummary&) const = default;
};

struct RoundRecord {
  int round = 0;  // 1-based
  std::vector<int> sampled;
  std::uint32_t digest = 0;  // CRC32 of the aggregated float32 parameters
  std::vector<ClientSummary> clients;
  std::optional<double> eval_loss;  // filled when an evaluator is supplied
  std::optional<double> eval_accuracy;

  nlohmann::json to_json() const;
  bool operator==(const RoundRecord&) const = default;
};

/// m = max(ceil(C K), 1).
int sample_count(int clients, double fraction);

/// Uniform sample of m distinct client ids, sorted ascending. Deterministic
/// in (seed, round).
std::vector<int> sample_clients(int clients, double fraction, std::uint64_t seed, int round);

/// Weighted mean sum_k (n_k / m) w_k accumulated in float64. Components are
/// reduced over clients in list order; the parameter axis runs in parallel.
std::vector<double> aggregate(std::span<const ClientUpdate> updates, int threads = 0);
std::vector<double> aggregate_serial(std::span<const ClientUpdate> updates);

/// CRC32 over the little-endian bytes of a float32 vector.
std::uint32_t params_digest(std::span<const float> params);

/// Seed used for local training in `round` (0-based); round 0 keeps the base
/// seed so a one-round federation reproduces plain client_train.
std::uint64_t round_seed(std::uint64_t base, int round);

/// What the server talks to. train() may be called concurrently on different
/// endpoints but never concurrently on the same one.
class ClientEndpoint {
 public:
  virtual ~ClientEndpoint() = default;
  virtual int id() const = 0;
  virtual ClientUpdate train(int round, std::span<const float> global) = 0;
  virtual void round_done(int /*round*/, std::uint32_t /*digest*/) {}
  virtual void shutdown() {}
};

/// Local training step shared by the in-process endpoint and the TCP client
/// agent: float32 global weights in, float32 trained weights out.
ClientUpdate train_local(int client_id, const model::ModelConfig& mc,
                         const training::TrainConfig& tc, const data::Dataset& ds,
                         int round, std::span<const float> global);

class LocalClient final : public ClientEndpoint {
 public:
  LocalClient(int id, model::ModelConfig mc, training::TrainConfig tc, data::Dataset ds);

  int id() const override { return id_; }
  ClientUpdate train(int round, std::span<const float> global) override;

 private:
  int id_;
  model::ModelConfig mc_;
  training::TrainConfig tc_;
  data::Dataset ds_;
};

struct RunOptions {
  std::function<std::optional<std::pair<double, double>>(const model::ModelParams&)> evaluate;
  std::function<void(const RoundRecord&, const model::ModelParams&)> on_round;
  int threads = 0;  // aggregation threads
};

struct FedResult {
  model::ModelParams params;  // float32-representable
  std::vector<RoundRecord> rounds;
};

/// The float32 starting point every participant derives from the model config.
model::ModelParams initial_global(const model::ModelConfig& mc);

/// Synchronous FedAvg over `endpoints` (index = client id). Sampled clients
/// train concurrently; any failure aborts the round with Errc::client_failed
/// naming the client. Shutdown is sent to every endpoint on exit.
FedResult run_federated(const FedConfig& fed, const model::ModelConfig& mc,
                        std::span<ClientEndpoint* const> endpoints,
                        const RunOptions& opts = {});

/// In-process convenience: one LocalClient per partition.
FedResult run_federated(const FedConfig& fed, const model::ModelConfig& mc,
                        const training::TrainConfig& tc,
                        std::span<const data::Dataset> partitions,
                        const RunOptions& opts = {});

}  // namespace fedgest::federation
