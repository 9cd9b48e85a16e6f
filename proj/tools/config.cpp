#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fedgest/error.hpp"

namespace fedgest::cli {

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const auto m = n.Mark();
    const std::string where =
        m.is_null() ? source_ : source_ + ":" + std::to_string(m.line + 1);
    throw Error(Errc::schema, where + ": " + msg);
  }

  template <typename T>
  T scalar(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' has an invalid value '" + n.Scalar() + "'");
    }
  }

  using Handler = std::function<void(const YAML::Node&)>;

  void section(const YAML::Node& node, const std::string& name,
               const std::map<std::string, Handler>& handlers) const {
    if (node.IsNull()) return;
    if (!node.IsMap()) fail(node, "section '" + name + "' must be a mapping");
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      const auto it = handlers.find(key);
      if (it == handlers.end()) fail(kv.first, "unknown key '" + name + "." + key + "'");
      try {
        it->second(kv.second);
      } catch (const Error& e) {
        if (e.code() == Errc::schema) throw;
        fail(kv.second, name + "." + key + ": " + e.what());
      }
    }
  }

  template <typename T>
  Handler set(T& target, const std::string& key) const {
    return [this, &target, key](const YAML::Node& n) { target = scalar<T>(n, key); };
  }

 private:
  std::string source_;
};

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  train.validate();
  federation.fed.validate();
  pipeline.cfg.validate();
  if (data.augment < 0) throw Error(Errc::schema, "data.augment must be >= 0");
  if (data.test_clips_per_class < 1) throw Error(Errc::schema, "data.test_clips_per_class must be >= 1");
  if (!(federation.overlap >= 0.0 && federation.overlap <= 1.0)) {
    throw Error(Errc::schema, "federation.overlap must lie in [0, 1]");
  }
  if (model.input_width != 3 * data.synthetic.joints) {
    throw Error(Errc::schema, "model.input_width (" + std::to_string(model.input_width) +
                                  ") must equal 3 * data.joints (" +
                                  std::to_string(3 * data.synthetic.joints) + ")");
  }
  if (model.window != data.synthetic.window || pipeline.cfg.window != data.synthetic.window) {
    throw Error(Errc::schema, "model.window, pipeline.window and data.window must agree");
  }
  if (pipeline.cfg.joints != data.synthetic.joints) {
    throw Error(Errc::schema, "pipeline.joints must equal data.joints");
  }
  if (model.classes != data.synthetic.classes) {
    throw Error(Errc::schema, "model.classes must equal data.classes");
  }
  if (federation.local_epochs < 1) throw Error(Errc::schema, "federation.local_epochs must be >= 1");
  if (pipeline.frame_period_ms < 1) throw Error(Errc::schema, "pipeline.frame_period_ms must be >= 1");
}

training::TrainConfig ExperimentConfig::client_train() const {
  auto t = train;
  t.epochs = federation.local_epochs;
  return t;
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  data.synthetic.seed = seed;
  model.init_seed = seed;
  train.seed = seed;
  federation.fed.seed = seed;
  pipeline.seed = seed;
}

ExperimentConfig parse_config(const std::string& yaml, const std::string& source) {
  Parser p(source);
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw Error(Errc::schema, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  if (!root.IsMap()) p.fail(root, "top level must be a mapping");

  auto& d = cfg.data;
  auto& m = cfg.model;
  auto& t = cfg.train;
  auto& f = cfg.federation;
  auto& pl = cfg.pipeline;

  const std::map<std::string, Parser::Handler> data_keys = {
      {"classes", p.set(d.synthetic.classes, "classes")},
      {"clips_per_class", p.set(d.synthetic.clips_per_class, "clips_per_class")},
      {"joints", p.set(d.synthetic.joints, "joints")},
      {"window", p.set(d.synthetic.window, "window")},
      {"noise", p.set(d.synthetic.noise, "noise")},
      {"seed", p.set(d.synthetic.seed, "seed")},
      {"augment", p.set(d.augment, "augment")},
      {"test_clips_per_class", p.set(d.test_clips_per_class, "test_clips_per_class")},
      {"test_seed", p.set(d.test_seed, "test_seed")},
  };
  const std::map<std::string, Parser::Handler> model_keys = {
      {"input_width", p.set(m.input_width, "input_width")},
      {"window", p.set(m.window, "window")},
      {"lstm1_units", p.set(m.lstm1_units, "lstm1_units")},
      {"lstm2_units", p.set(m.lstm2_units, "lstm2_units")},
      {"dense1_units", p.set(m.dense1_units, "dense1_units")},
      {"dropout_rate", p.set(m.dropout_rate, "dropout_rate")},
      {"dense2_units", p.set(m.dense2_units, "dense2_units")},
      {"classes", p.set(m.classes, "classes")},
      {"seed", p.set(m.init_seed, "seed")},
  };
  const std::map<std::string, Parser::Handler> train_keys = {
      {"batch_size", p.set(t.batch_size, "batch_size")},
      {"epochs", p.set(t.epochs, "epochs")},
      {"learning_rate", p.set(t.learning_rate, "learning_rate")},
      {"early_stop_patience", p.set(t.early_stop_patience, "early_stop_patience")},
      {"plateau_patience", p.set(t.plateau_patience, "plateau_patience")},
      {"plateau_factor", p.set(t.plateau_factor, "plateau_factor")},
      {"plateau_min_delta", p.set(t.plateau_min_delta, "plateau_min_delta")},
      {"min_learning_rate", p.set(t.min_learning_rate, "min_learning_rate")},
      {"clip_norm", p.set(t.clip_norm, "clip_norm")},
      {"threads", p.set(t.threads, "threads")},
      {"seed", p.set(t.seed, "seed")},
  };
  const std::map<std::string, Parser::Handler> fed_keys = {
      {"clients", p.set(f.fed.clients, "clients")},
      {"fraction", p.set(f.fed.fraction, "fraction")},
      {"rounds", p.set(f.fed.rounds, "rounds")},
      {"local_epochs", p.set(f.local_epochs, "local_epochs")},
      {"seed", p.set(f.fed.seed, "seed")},
      {"overlap", p.set(f.overlap, "overlap")},
      {"partition_seed", p.set(f.partition_seed, "partition_seed")},
      {"endpoint", p.set(f.endpoint, "endpoint")},
  };
  const std::map<std::string, Parser::Handler> pipe_keys = {
      {"joints", p.set(pl.cfg.joints, "joints")},
      {"window", p.set(pl.cfg.window, "window")},
      {"stride", p.set(pl.cfg.stride, "stride")},
      {"filter_depth", p.set(pl.cfg.filter_depth, "filter_depth")},
      {"filter_mode",
       [&](const YAML::Node& n) {
         const auto s = p.scalar<std::string>(n, "filter_mode");
         if (s == "mean") {
           pl.cfg.filter_mode = pipeline::FilterMode::mean;
         } else if (s == "majority") {
           pl.cfg.filter_mode = pipeline::FilterMode::majority;
         } else {
           p.fail(n, "filter_mode must be 'mean' or 'majority'");
         }
       }},
      {"wait_window_ms", p.set(pl.cfg.wait_window_ms, "wait_window_ms")},
      {"ar_budget_ms", p.set(pl.cfg.ar_budget_ms, "ar_budget_ms")},
      {"freshness_ms", p.set(pl.cfg.freshness_ms, "freshness_ms")},
      {"frame_period_ms", p.set(pl.frame_period_ms, "frame_period_ms")},
      {"priority",
       [&](const YAML::Node& n) {
         if (!n.IsSequence()) p.fail(n, "priority must be a list of observer ids");
         pl.cfg.priority.clear();
         for (const auto& x : n) pl.cfg.priority.push_back(p.scalar<int>(x, "priority"));
       }},
      {"gate_action", p.set(pl.cfg.gate_action, "gate_action")},
      {"commands",
       [&](const YAML::Node& n) {
         if (!n.IsMap()) p.fail(n, "commands must map action names to commands");
         pl.cfg.commands.clear();
         for (const auto& kv : n) {
           pl.cfg.commands[p.scalar<std::string>(kv.first, "commands")] =
               p.scalar<std::string>(kv.second, "commands");
         }
       }},
      {"seed", p.set(pl.seed, "seed")},
  };
  const std::map<std::string, const std::map<std::string, Parser::Handler>*> sections = {
      {"data", &data_keys},
      {"model", &model_keys},
      {"train", &train_keys},
      {"federation", &fed_keys},
      {"pipeline", &pipe_keys},
  };

  for (const auto& kv : root) {
    const std::string name = kv.first.as<std::string>();
    const auto it = sections.find(name);
    if (it == sections.end()) p.fail(kv.first, "unknown section '" + name + "'");
    p.section(kv.second, name, *it->second);
  }

  // Keep dependent dimensions in step unless the document set them itself.
  if (!root["model"] || !root["model"]["input_width"]) m.input_width = 3 * d.synthetic.joints;
  if (!root["model"] || !root["model"]["window"]) m.window = d.synthetic.window;
  if (!root["model"] || !root["model"]["classes"]) m.classes = d.synthetic.classes;
  if (!root["pipeline"] || !root["pipeline"]["window"]) pl.cfg.window = d.synthetic.window;
  if (!root["pipeline"] || !root["pipeline"]["joints"]) pl.cfg.joints = d.synthetic.joints;

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::schema, source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap
      << YAML::Key << "classes" << YAML::Value << c.data.synthetic.classes
      << YAML::Key << "clips_per_class" << YAML::Value << c.data.synthetic.clips_per_class
      << YAML::Key << "joints" << YAML::Value << c.data.synthetic.joints
      << YAML::Key << "window" << YAML::Value << c.data.synthetic.window
      << YAML::Key << "noise" << YAML::Value << c.data.synthetic.noise
      << YAML::Key << "augment" << YAML::Value << c.data.augment
      << YAML::Key << "test_clips_per_class" << YAML::Value << c.data.test_clips_per_class
      << YAML::Key << "test_seed" << YAML::Value << c.data.test_seed
      << YAML::Key << "seed" << YAML::Value << c.data.synthetic.seed << YAML::EndMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap
      << YAML::Key << "lstm1_units" << YAML::Value << c.model.lstm1_units
      << YAML::Key << "lstm2_units" << YAML::Value << c.model.lstm2_units
      << YAML::Key << "dense1_units" << YAML::Value << c.model.dense1_units
      << YAML::Key << "dropout_rate" << YAML::Value << c.model.dropout_rate
      << YAML::Key << "dense2_units" << YAML::Value << c.model.dense2_units
      << YAML::Key << "seed" << YAML::Value << c.model.init_seed << YAML::EndMap;
  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap
      << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size
      << YAML::Key << "epochs" << YAML::Value << c.train.epochs
      << YAML::Key << "learning_rate" << YAML::Value << c.train.learning_rate
      << YAML::Key << "early_stop_patience" << YAML::Value << c.train.early_stop_patience
      << YAML::Key << "plateau_patience" << YAML::Value << c.train.plateau_patience
      << YAML::Key << "plateau_factor" << YAML::Value << c.train.plateau_factor
      << YAML::Key << "plateau_min_delta" << YAML::Value << c.train.plateau_min_delta
      << YAML::Key << "min_learning_rate" << YAML::Value << c.train.min_learning_rate
      << YAML::Key << "clip_norm" << YAML::Value << c.train.clip_norm
      << YAML::Key << "threads" << YAML::Value << c.train.threads
      << YAML::Key << "seed" << YAML::Value << c.train.seed << YAML::EndMap;
  out << YAML::Key << "federation" << YAML::Value << YAML::BeginMap
      << YAML::Key << "clients" << YAML::Value << c.federation.fed.clients
      << YAML::Key << "fraction" << YAML::Value << c.federation.fed.fraction
      << YAML::Key << "rounds" << YAML::Value << c.federation.fed.rounds
      << YAML::Key << "local_epochs" << YAML::Value << c.federation.local_epochs
      << YAML::Key << "overlap" << YAML::Value << c.federation.overlap
      << YAML::Key << "partition_seed" << YAML::Value << c.federation.partition_seed
      << YAML::Key << "endpoint" << YAML::Value << c.federation.endpoint
      << YAML::Key << "seed" << YAML::Value << c.federation.fed.seed << YAML::EndMap;
  out << YAML::Key << "pipeline" << YAML::Value << YAML::BeginMap
      << YAML::Key << "stride" << YAML::Value << c.pipeline.cfg.stride
      << YAML::Key << "filter_depth" << YAML::Value << c.pipeline.cfg.filter_depth
      << YAML::Key << "filter_mode" << YAML::Value
      << (c.pipeline.cfg.filter_mode == pipeline::FilterMode::mean ? "mean" : "majority")
      << YAML::Key << "wait_window_ms" << YAML::Value << c.pipeline.cfg.wait_window_ms
      << YAML::Key << "ar_budget_ms" << YAML::Value << c.pipeline.cfg.ar_budget_ms
      << YAML::Key << "freshness_ms" << YAML::Value << c.pipeline.cfg.freshness_ms
      << YAML::Key << "frame_period_ms" << YAML::Value << c.pipeline.frame_period_ms
      << YAML::Key << "priority" << YAML::Value << YAML::Flow << c.pipeline.cfg.priority
      << YAML::Key << "gate_action" << YAML::Value << c.pipeline.cfg.gate_action
      << YAML::Key << "seed" << YAML::Value << c.pipeline.seed << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace fedgest::cli
