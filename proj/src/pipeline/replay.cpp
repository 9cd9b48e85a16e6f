#include <chrono>
#include <cmath>

#include "fedgest/error.hpp"
#include "fedgest/pipeline.hpp"

namespace fedgest::pipeline {

ObserverFrame parse_frame(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::schema, "record is not a JSON object");
  for (const char* key : {"observer", "t_ms", "detected"}) {
    if (!j.contains(key)) throw Error(Errc::schema, std::string("missing field '") + key + "'");
  }
  ObserverFrame f;
  if (!j["observer"].is_number_integer()) throw Error(Errc::schema, "'observer' must be an integer");
  if (!j["t_ms"].is_number_integer()) throw Error(Errc::schema, "'t_ms' must be an integer");
  if (!j["detected"].is_boolean()) throw Error(Errc::schema, "'detected' must be a boolean");
  f.observer = j["observer"].get<int>();
  f.t_ms = j["t_ms"].get<std::int64_t>();
  f.detected = j["detected"].get<bool>();
  if (!f.detected) return f;
  if (!j.contains("keypoints") || !j["keypoints"].is_array()) {
    throw Error(Errc::schema, "detected frame needs a 'keypoints' array");
  }
  for (const auto& kp : j["keypoints"]) {
    if (!kp.is_array() || kp.size() != 3) {
      throw Error(Errc::schema, "each keypoint must be an [x, y, z] array");
    }
    data::Vec3 v{};
    for (std::size_t d = 0; d < 3; ++d) {
      if (!kp[d].is_number()) throw Error(Errc::schema, "keypoint coordinates must be numbers");
      v[d] = kp[d].get<double>();
    }
    f.keypoints.joints.push_back(v);
  }
  return f;
}

nlohmann::json frame_to_json(const ObserverFrame& f) {
  nlohmann::json j = {{"observer", f.observer}, {"t_ms", f.t_ms}, {"detected", f.detected}};
  if (f.detected) {
    nlohmann::json kps = nlohmann::json::array();
    for (const auto& v : f.keypoints.joints) kps.push_back({v[0], v[1], v[2]});
    j["keypoints"] = std::move(kps);
  }
  return j;
}

nlohmann::json ReplayResult::report() const {
  nlohmann::json cmds = nlohmann::json::array();
  nlohmann::json wall = nlohmann::json::array();
  for (const auto& t : timings) {
    cmds.push_back({{"t_ms", t.t_ms}, {"command", t.command},
                    {"modeled_response_ms", t.modeled_response_ms}});
    wall.push_back({{"t_ms", t.t_ms}, {"measured_response_ms", t.measured_response_ms}});
  }
  return {{"frames", frames},
          {"clips", clips},
          {"events", events.size()},
          {"modeled_response_ms", modeled_response_ms},
          {"decisions", decisions},
          {"commands", cmds},
          {"wall", {{"commands", wall}}}};
}

ReplayResult replay(std::istream& log, const Classifier& classify, const PipelineConfig& cfg,
                    const std::vector<std::string>& class_names,
                    const std::function<void(std::vector<float>&)>& scale) {
  cfg.validate();
  StreamAssembler assembler(cfg);
  Arbiter arbiter(cfg, class_names);
  std::map<int, PredictionFilter> filters;
  ReplayResult out;
  out.modeled_response_ms = cfg.wait_window_ms + cfg.ar_budget_ms;

  std::string line;
  int lineno = 0;
  while (std::getline(log, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ObserverFrame f;
    std::optional<std::vector<float>> clip;
    try {
      f = parse_frame(nlohmann::json::parse(line));
      clip = assembler.push(f);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::schema, "log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "log line " + std::to_string(lineno) + ": " + e.what());
    }
    ++out.frames;
    if (f.detected) arbiter.note_detection(f.observer, f.t_ms);
    if (!clip) continue;
    ++out.clips;

    if (scale) scale(*clip);
    const auto t0 = std::chrono::steady_clock::now();
    const auto probs = classify(*clip);
    const double ar_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (probs.size() != class_names.size()) {
      throw Error(Errc::dimension, "classifier returned " + std::to_string(probs.size()) +
                                       " probabilities for " +
                                       std::to_string(class_names.size()) + " classes");
    }
    auto [it, fresh] = filters.try_emplace(f.observer, cfg.filter_depth, cfg.filter_mode);
    const auto filtered = it->second.push(probs);
    if (!filtered) continue;

    const Candidate cand{f.observer, filtered->action, filtered->confidence,
                         f.t_ms + cfg.ar_budget_ms};
    std::optional<CommandEvent> ev;
    const Decision d = arbiter.offer(cand, &ev);
    ++out.decisions[std::string(to_string(d))];
    if (ev) {
      out.timings.push_back({ev->t_ms, ev->command, out.modeled_response_ms,
                             static_cast<double>(cfg.wait_window_ms) + ar_ms});
      out.events.push_back(std::move(*ev));
    }
  }
  return out;
}

}  // namespace fedgest::pipeline
