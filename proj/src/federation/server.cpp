#include <bit>
#include <future>

#include <spdlog/spdlog.h>

#include "fedgest/binio.hpp"
#include "fedgest/error.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/metrics.hpp"

namespace fedgest::federation {

nlohmann::json RoundRecord::to_json() const {
  nlohmann::json clients_json = nlohmann::json::array();
  for (const auto& c : clients) {
    clients_json.push_back({{"client", c.client_id},
                            {"samples", c.samples},
                            {"loss", c.loss},
                            {"accuracy", c.accuracy},
                            {"epochs", c.epochs}});
  }
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", digest);
  nlohmann::json j = {{"round", round}, {"sampled", sampled}, {"digest", hex},
                      {"clients", clients_json}};
  if (eval_loss) j["eval_loss"] = *eval_loss;
  if (eval_accuracy) j["eval_accuracy"] = *eval_accuracy;
  return j;
}

std::uint32_t params_digest(std::span<const float> params) {
  ByteWriter w;
  for (float v : params) w.f32(v);
  return crc32(w.data());
}

model::ModelParams initial_global(const model::ModelConfig& mc) {
  return model::quantize_float32(model::init_params(mc));
}

ClientUpdate train_local(int client_id, const model::ModelConfig& mc,
                         const training::TrainConfig& tc, const data::Dataset& ds,
                         int round, std::span<const float> global) {
  training::TrainConfig cfg = tc;
  cfg.seed = round_seed(tc.seed, round);
  const auto start = model::from_float32(mc, global);
  const auto res = training::client_train(client_id, start, ds, cfg);
  ClientUpdate u;
  u.client_id = client_id;
  u.params = model::to_float32(res.params);
  u.samples = static_cast<std::uint32_t>(res.samples);
  u.loss = res.report.final_loss;
  u.accuracy = res.report.final_accuracy;
  u.epochs = static_cast<std::uint32_t>(res.report.epochs_run);
  return u;
}

LocalClient::LocalClient(int id, model::ModelConfig mc, training::TrainConfig tc,
                         data::Dataset ds)
    : id_(id), mc_(std::move(mc)), tc_(std::move(tc)), ds_(std::move(ds)) {}

ClientUpdate LocalClient::train(int round, std::span<const float> global) {
  return train_local(id_, mc_, tc_, ds_, round, global);
}

namespace {

struct ShutdownGuard {
  std::span<ClientEndpoint* const> endpoints;
  ~ShutdownGuard() {
    for (auto* e : endpoints) {
      try {
        e->shutdown();
      } catch (const std::exception& ex) {
        spdlog::warn("shutdown of client {} failed: {}", e->id(), ex.what());
      }
    }
  }
};

}  // namespace

FedResult run_federated(const FedConfig& fed, const model::ModelConfig& mc,
                        std::span<ClientEndpoint* const> endpoints,
                        const RunOptions& opts) {
  fed.validate();
  mc.validate();
  if (endpoints.size() != static_cast<std::size_t>(fed.clients)) {
    throw Error(Errc::range, "federation configured for " + std::to_string(fed.clients) +
                                 " clients but " + std::to_string(endpoints.size()) +
                                 " endpoints were supplied");
  }
  ShutdownGuard guard{endpoints};

  FedResult result{initial_global(mc), {}};
  const std::size_t flat = result.params.size();

  for (int t = 0; t < fed.rounds; ++t) {
    RoundRecord rec;
    rec.round = t + 1;
    rec.sampled = sample_clients(fed.clients, fed.fraction, fed.seed, t);
    const std::vector<float> global = model::to_float32(result.params);

    std::vector<std::future<ClientUpdate>> pending;
    for (int k : rec.sampled) {
      ClientEndpoint* ep = endpoints[static_cast<std::size_t>(k)];
      pending.push_back(std::async(std::launch::async, [ep, t, &global] {
        return ep->train(t, global);
      }));
    }
    // Full barrier before aggregating; the first failure (by client id) wins.
    std::vector<ClientUpdate> updates;
    std::string failure;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      try {
        updates.push_back(pending[i].get());
        if (updates.back().params.size() != flat) {
          throw Error(Errc::dimension, "sent " + std::to_string(updates.back().params.size()) +
                                           " parameters, expected " + std::to_string(flat));
        }
      } catch (const std::exception& ex) {
        if (failure.empty()) {
          failure = "round " + std::to_string(t + 1) + ": client " +
                    std::to_string(rec.sampled[i]) + " failed: " + ex.what();
        }
      }
    }
    if (!failure.empty()) throw Error(Errc::client_failed, failure);

    const auto avg = aggregate(updates, opts.threads);
    result.params = model::quantize_float32(model::unflatten(mc, avg));
    const auto emitted = model::to_float32(result.params);
    rec.digest = params_digest(emitted);
    for (const auto& u : updates) {
      rec.clients.push_back({u.client_id, u.samples, u.loss, u.accuracy, u.epochs});
    }
    if (opts.evaluate) {
      if (auto ev = opts.evaluate(result.params)) {
        rec.eval_loss = ev->first;
        rec.eval_accuracy = ev->second;
      }
    }
    for (auto* e : endpoints) e->round_done(t, rec.digest);
    spdlog::info("round {}/{}: {} clients, digest {:08x}{}", t + 1, fed.rounds,
                 rec.sampled.size(), rec.digest,
                 rec.eval_accuracy ? fmt::format(", eval accuracy {:.4f}", *rec.eval_accuracy)
                                   : std::string());
    if (opts.on_round) opts.on_round(rec, result.params);
    result.rounds.push_back(std::move(rec));
  }
  return result;
}

FedResult run_federated(const FedConfig& fed, const model::ModelConfig& mc,
                        const training::TrainConfig& tc,
                        std::span<const data::Dataset> partitions,
                        const RunOptions& opts) {
  std::vector<std::unique_ptr<LocalClient>> owned;
  std::vector<ClientEndpoint*> eps;
  for (std::size_t k = 0; k < partitions.size(); ++k) {
    owned.push_back(std::make_unique<LocalClient>(static_cast<int>(k), mc, tc, partitions[k]));
    eps.push_back(owned.back().get());
  }
  return run_federated(fed, mc, eps, opts);
}

}  // namespace fedgest::federation
