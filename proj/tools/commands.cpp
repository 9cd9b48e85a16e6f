#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"
#include "fedgest/rng.hpp"
#include "fedgest/tcp.hpp"

namespace fedgest::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

std::vector<std::string> class_names(const data::Dataset& ds) {
  std::vector<std::string> names;
  for (const auto& c : ds.classes) names.push_back(c.name);
  return names;
}

void check_model_fits(const model::ModelConfig& mc, const data::Dataset& ds,
                      const std::string& what) {
  if (ds.feature_width() != mc.input_width || ds.window != mc.window ||
      ds.class_count() != mc.classes) {
    throw Error(Errc::dimension,
                what + " is " + std::to_string(ds.window) + " frames x " +
                    std::to_string(ds.feature_width()) + " features with " +
                    std::to_string(ds.class_count()) + " classes; the model expects " +
                    std::to_string(mc.window) + " x " + std::to_string(mc.input_width) +
                    " with " + std::to_string(mc.classes));
  }
}

std::string resolve_endpoint(const Context& ctx, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(tcp::kEndpointEnv); env && *env) return env;
  return ctx.config.federation.endpoint;
}

}  // namespace

std::string Context::path(const std::string& name) const {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

data::Dataset scaled(const data::Dataset& ds, const data::ScalerParams& s) {
  return data::apply_scaler(ds, s);
}

std::string craft_log(const ExperimentConfig& cfg, const std::vector<std::string>& actions,
                      int windows) {
  if (windows < 1) throw Error(Errc::range, "windows per action must be >= 1");
  const auto& sc = cfg.data.synthetic;
  const auto classes = data::default_classes(sc.classes);
  std::ostringstream out;
  std::int64_t t = 0;
  std::uint64_t stream = 0;
  for (const auto& name : actions) {
    int label = -1;
    for (const auto& c : classes) {
      if (c.name == name) label = c.id;
    }
    if (label < 0) throw Error(Errc::domain, "unknown action '" + name + "'");
    for (int w = 0; w < windows; ++w) {
      const auto clip = data::synthetic_clip(label, sc.joints, sc.window, sc.noise,
                                             mix_seed(cfg.pipeline.seed, stream++));
      for (int f = 0; f < sc.window; ++f) {
        pipeline::ObserverFrame fr;
        fr.observer = cfg.pipeline.cfg.priority.front();
        fr.t_ms = t;
        fr.detected = true;
        const auto row = clip.row(f, sc.joints * 3);
        for (int j = 0; j < sc.joints; ++j) {
          fr.keypoints.joints.push_back({row[3 * j], row[3 * j + 1], row[3 * j + 2]});
        }
        out << pipeline::frame_to_json(fr).dump() << '\n';
        t += cfg.pipeline.frame_period_ms;
      }
    }
  }
  return out.str();
}

GenResult cmd_gen(const Context& ctx, const GenOptions& opts) {
  const auto& dc = ctx.config.data;
  const int augment = opts.augment.value_or(dc.augment);
  if (augment < 0) throw Error(Errc::range, "--augment must be >= 0");

  GenResult r;
  const auto raw = data::generate_synthetic(dc.synthetic);
  r.train = data::augment_dataset(raw, augment, mix_seed(dc.synthetic.seed, 0xa0));
  data::SyntheticConfig tc = dc.synthetic;
  tc.clips_per_class = dc.test_clips_per_class;
  tc.seed = dc.test_seed;
  r.test = data::generate_synthetic(tc);

  r.train_path = ctx.path("dataset.fgd");
  r.test_path = ctx.path("test.fgd");
  data::save_dataset(r.train, r.train_path);
  data::save_dataset(r.test, r.test_path);
  std::printf("%s: %zu clips, %d classes, %d frames x %d joints (augment %d)\n",
              r.train_path.c_str(), r.train.size(), r.train.class_count(), r.train.window,
              r.train.joints, augment);
  std::printf("%s: %zu held-out clips\n", r.test_path.c_str(), r.test.size());

  if (!opts.log_sequence.empty()) {
    const auto actions = split_list(opts.log_sequence);
    r.log_path = ctx.path(opts.log_name);
    write_text(*r.log_path, craft_log(ctx.config, actions, opts.windows_per_action));
    std::printf("%s: %zu actions x %d windows\n", r.log_path->c_str(), actions.size(),
                opts.windows_per_action);
  }
  return r;
}

TrainResult cmd_train(const Context& ctx, const std::string& dataset_path) {
  const auto& mc = ctx.config.model;
  const auto ds = data::load_dataset(dataset_path);
  check_model_fits(mc, ds, "dataset '" + dataset_path + "'");
  const auto scaler = data::fit_scaler(ds);
  const auto train = scaled(ds, scaler);

  const auto res =
      training::client_train(0, federation::initial_global(mc), train, ctx.config.train);
  // The checkpoint stores float32 weights; report what it will reproduce.
  const auto q = model::quantize_float32(res.params);
  const auto ev = metrics::evaluate(q, train, ctx.config.train.threads);
  TrainResult out{res.report, {q, scaler, class_names(ds)}, ctx.path("model.fgm")};
  out.report.final_loss = ev.loss;
  out.report.final_accuracy = ev.accuracy;
  model::save_checkpoint(out.checkpoint, out.checkpoint_path);
  write_text(ctx.path("train_report.json"), out.report.to_json().dump(2) + "\n");
  write_text(ctx.path("train_curves.csv"), out.report.to_csv());
  std::printf("trained %d epochs (best %d, loss %.6f); final accuracy %.4f -> %s\n",
              out.report.epochs_run, out.report.best_epoch, out.report.best_loss,
              out.report.final_accuracy, out.checkpoint_path.c_str());
  return out;
}

FederateResult cmd_federate(const Context& ctx, const FederateOptions& opts) {
  const auto& cfg = ctx.config;
  const auto& mc = cfg.model;
  const auto ds = data::load_dataset(opts.dataset_path);
  check_model_fits(mc, ds, "dataset '" + opts.dataset_path + "'");
  // Every participant derives the same scaler from the shared global file.
  const auto scaler = data::fit_scaler(ds);
  const auto global = scaled(ds, scaler);
  const auto parts = data::partition(global, cfg.federation.fed.clients,
                                     cfg.federation.overlap, cfg.federation.partition_seed);

  std::optional<data::Dataset> test;
  if (!opts.test_path.empty()) {
    test = scaled(data::load_dataset(opts.test_path), scaler);
    check_model_fits(mc, *test, "test set '" + opts.test_path + "'");
  }
  federation::RunOptions ro;
  ro.threads = cfg.train.threads;
  if (test) {
    ro.evaluate = [&](const model::ModelParams& p) {
      const auto ev = metrics::evaluate(p, *test, cfg.train.threads);
      return std::optional<std::pair<double, double>>({ev.loss, ev.accuracy});
    };
  }

  FederateResult out;
  if (opts.mode == FedMode::client) {
    const int k = opts.client_id;
    if (k < 0 || k >= cfg.federation.fed.clients) {
      throw Error(Errc::range, "client id " + std::to_string(k) + " outside [0, " +
                                   std::to_string(cfg.federation.fed.clients) + ")");
    }
    const auto ep = tcp::parse_endpoint(resolve_endpoint(ctx, opts.endpoint));
    const auto rep = tcp::connect_client(ep, k, parts[static_cast<std::size_t>(k)], mc,
                                         cfg.client_train());
    out.rounds_trained = rep.rounds_trained;
    std::printf("client %d: trained %d rounds, last digest %08x\n", k, rep.rounds_trained,
                rep.last_digest);
    return out;
  }

  if (opts.mode == FedMode::local) {
    out.fed = federation::run_federated(cfg.federation.fed, mc, cfg.client_train(), parts, ro);
  } else {
    const auto ep = tcp::parse_endpoint(resolve_endpoint(ctx, opts.endpoint));
    tcp::ServeOptions so;
    so.run = ro;
    out.fed = tcp::serve(ep, cfg.federation.fed, mc, so);
  }

  out.checkpoint_path = ctx.path("federated.fgm");
  model::save_checkpoint({out.fed->params, scaler, class_names(ds)}, *out.checkpoint_path);
  nlohmann::json rounds = nlohmann::json::array();
  std::ostringstream csv;
  csv << std::setprecision(17) << "round,digest,eval_loss,eval_accuracy,mean_client_accuracy\n";
  for (const auto& r : out.fed->rounds) {
    rounds.push_back(r.to_json());
    double mean = 0.0;
    for (const auto& c : r.clients) mean += c.accuracy;
    mean /= static_cast<double>(r.clients.size());
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08x", r.digest);
    csv << r.round << ',' << hex << ',' << (r.eval_loss ? std::to_string(*r.eval_loss) : "")
        << ',' << (r.eval_accuracy ? std::to_string(*r.eval_accuracy) : "") << ',' << mean
        << '\n';
  }
  write_text(ctx.path("rounds.json"), rounds.dump(2) + "\n");
  write_text(ctx.path("rounds.csv"), csv.str());
  const auto& last = out.fed->rounds.back();
  std::printf("federated %d rounds over %d clients; digest %08x%s -> %s\n",
              cfg.federation.fed.rounds, cfg.federation.fed.clients, last.digest,
              last.eval_accuracy ? (", held-out accuracy " + std::to_string(*last.eval_accuracy)).c_str()
                                 : "",
              out.checkpoint_path->c_str());
  return out;
}

nlohmann::json cmd_eval(const Context& ctx, const std::string& checkpoint_path,
                        const std::string& dataset_path) {
  const auto ck = model::load_checkpoint(checkpoint_path);
  const auto ds = data::load_dataset(dataset_path);
  if (ds.empty()) throw Error(Errc::empty, "dataset '" + dataset_path + "' has no clips");
  check_model_fits(ck.params.config(), ds, "dataset '" + dataset_path + "'");
  const auto input = ck.scaler ? scaled(ds, *ck.scaler) : ds;
  const auto ev = metrics::evaluate(ck.params, input, ctx.config.train.threads);
  const auto names = ck.class_names.empty() ? class_names(ds) : ck.class_names;
  auto j = metrics::to_json(ev, names);
  write_text(ctx.path("eval.json"), j.dump(2) + "\n");
  write_text(ctx.path("confusion.csv"), metrics::confusion_csv(ev.confusion, names));
  return j;
}

ReplayOutput cmd_replay(const Context& ctx, const std::string& checkpoint_path,
                        const std::string& log_path) {
  const auto ck = model::load_checkpoint(checkpoint_path);
  std::ifstream log(log_path);
  if (!log) throw Error(Errc::io, "cannot open replay log '" + log_path + "'");
  auto names = ck.class_names;
  if (names.empty()) {
    for (const auto& c : data::default_classes(ck.params.config().classes)) names.push_back(c.name);
  }
  const auto& params = ck.params;
  pipeline::Classifier classify = [&params](std::span<const float> clip) {
    return model::predict(params, clip);
  };
  std::function<void(std::vector<float>&)> scale;
  if (ck.scaler) {
    scale = [&ck](std::vector<float>& clip) { data::apply_scaler_inplace(clip, *ck.scaler); };
  }
  ReplayOutput out;
  out.result = pipeline::replay(log, classify, ctx.config.pipeline.cfg, names, scale);
  std::ostringstream events;
  for (const auto& e : out.result.events) events << e.to_json().dump() << '\n';
  out.events_path = ctx.path("commands.jsonl");
  out.report_path = ctx.path("replay_report.json");
  write_text(out.events_path, events.str());
  write_text(out.report_path, out.result.report().dump(2) + "\n");
  std::printf("%d frames, %d clips, %zu commands; modeled response %lld ms -> %s\n",
              out.result.frames, out.result.clips, out.result.events.size(),
              static_cast<long long>(out.result.modeled_response_ms), out.events_path.c_str());
  return out;
}

std::string cmd_report(const Context& ctx, const std::string& rounds_path, double tolerance) {
  std::ifstream in(rounds_path);
  if (!in) throw Error(Errc::io, "cannot open '" + rounds_path + "'");
  nlohmann::json rounds;
  try {
    in >> rounds;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, rounds_path + ": " + e.what());
  }
  if (!rounds.is_array() || rounds.empty()) {
    throw Error(Errc::schema, rounds_path + ": expected a non-empty array of round records");
  }
  std::ostringstream out;
  out << "| round | clients | digest | held-out loss | held-out accuracy |\n"
      << "|---|---|---|---|---|\n";
  std::optional<double> final_acc;
  if (rounds.back().contains("eval_accuracy")) final_acc = rounds.back()["eval_accuracy"].get<double>();
  int converged = 0;  // 0 = never settled
  for (const auto& r : rounds) {
    out << "| " << r.at("round").get<int>() << " | " << r.at("sampled").size() << " | "
        << r.at("digest").get<std::string>() << " | ";
    if (r.contains("eval_loss")) {
      out << std::fixed << std::setprecision(4) << r["eval_loss"].get<double>() << " | "
          << r["eval_accuracy"].get<double>() << " |\n";
      if (final_acc) {
        const bool close = std::abs(r["eval_accuracy"].get<double>() - *final_acc) <= tolerance;
        if (!close) {
          converged = 0;
        } else if (converged == 0) {
          converged = r["round"].get<int>();
        }
      }
    } else {
      out << "- | - |\n";
    }
  }
  if (converged > 0) {
    out << "\nHeld-out accuracy is within " << std::setprecision(1) << tolerance * 100 << " pp of the final round from round "
        << converged << " on.\n";
  }
  const std::string text = out.str();
  write_text(ctx.path("report.md"), text);
  return text;
}

}  // namespace fedgest::cli
