#include <algorithm>

#include "fedgest/error.hpp"
#include "fedgest/pipeline.hpp"

namespace fedgest::pipeline {

std::string_view to_string(Decision d) noexcept {
  switch (d) {
    case Decision::emitted: return "emitted";
    case Decision::gate_opened: return "gate_opened";
    case Decision::gate_closed: return "gate_closed";
    case Decision::debounced: return "debounced";
    case Decision::suppressed: return "suppressed";
    case Decision::ignored: return "ignored";
  }
  return "unknown";
}

nlohmann::json CommandEvent::to_json() const {
  return {{"t_ms", t_ms}, {"observer", observer}, {"action", action_name},
          {"command", command}, {"confidence", confidence}};
}

Arbiter::Arbiter(const PipelineConfig& cfg, std::vector<std::string> class_names)
    : cfg_(cfg), names_(std::move(class_names)) {
  cfg_.validate();
  const auto it = std::find(names_.begin(), names_.end(), cfg_.gate_action);
  if (it == names_.end()) {
    throw Error(Errc::domain, "gate action '" + cfg_.gate_action + "' is not a known class");
  }
  gate_action_ = static_cast<int>(it - names_.begin());
}

void Arbiter::note_detection(int observer, std::int64_t t_ms) {
  auto& last = last_seen_[observer];
  last = std::max(last, t_ms);
}

bool Arbiter::outranked(int observer, std::int64_t t_ms) const {
  for (int o : cfg_.priority) {
    if (o == observer) return false;
    const auto it = last_seen_.find(o);
    if (it != last_seen_.end() && t_ms - it->second <= cfg_.freshness_ms) return true;
  }
  // Observers missing from the priority list rank below all listed ones.
  return false;
}

Decision Arbiter::offer(const Candidate& c, std::optional<CommandEvent>* out) {
  if (out) out->reset();
  if (c.action < 0 || c.action >= static_cast<int>(names_.size())) {
    throw Error(Errc::domain, "candidate action " + std::to_string(c.action) + " out of range");
  }
  if (outranked(c.observer, c.t_ms)) return Decision::suppressed;
  if (c.action == gate_action_) {
    if (gate_open_) return Decision::ignored;
    gate_open_ = true;
    return Decision::gate_opened;
  }
  if (!gate_open_) return Decision::gate_closed;
  if (last_emit_ && c.t_ms - *last_emit_ < cfg_.wait_window_ms) return Decision::debounced;

  const std::string& name = names_[static_cast<std::size_t>(c.action)];
  const auto mapped = cfg_.commands.find(name);
  CommandEvent ev;
  ev.command = mapped != cfg_.commands.end() ? mapped->second : default_command(name);
  ev.observer = c.observer;
  ev.t_ms = c.t_ms;
  ev.action = c.action;
  ev.action_name = name;
  ev.confidence = c.confidence;
  last_emit_ = c.t_ms;
  if (out) *out = std::move(ev);
  return Decision::emitted;
}

}  // namespace fedgest::pipeline
