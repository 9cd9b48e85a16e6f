#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgest/data.hpp"

namespace fedgest::pipeline {

struct ObserverFrame {
  int observer = 0;
  std::int64_t t_ms = 0;
  bool detected = false;
  data::KeypointFrame keypoints;  // empty when not detected
};

enum class FilterMode { mean, majority };

struct PipelineConfig {
  int joints = 33;
  int window = 60;
  int stride = 0;  // frames dropped after each clip; 0 means `window` (tumbling)
  int filter_depth = 3;
  FilterMode filter_mode = FilterMode::mean;
  std::int64_t wait_window_ms = 10000;
  std::int64_t ar_budget_ms = 400;
  std::int64_t freshness_ms = 4000;  // 2 W frame periods at 30 fps
  std::vector<int> priority{0, 1};   // observer ids, main first
  std::string gate_action = "Have Command";
  std::map<std::string, std::string> commands;  // action name -> command; empty = derived

  void validate() const;
  int effective_stride() const { return stride > 0 ? stride : window; }
};

/// "Move to Left" -> "MOVE_TO_LEFT".
std::string default_command(const std::string& action);

struct CommandEvent {
  std::string command;
  int observer = 0;
  std::int64_t t_ms = 0;
  int action = 0;
  std::string action_name;
  double confidence = 0.0;

  nlohmann::json to_json() const;  // {t_ms, observer, action, command, confidence}
};

/// Collects detected frames per observer into W-frame clips.
class StreamAssembler {
 public:
  explicit StreamAssembler(const PipelineConfig& cfg);

  /// Returns a clip (W x 3K, frame/joint/xyz order) when one completes.
  /// Timestamps must strictly increase per observer; an undetected frame
  /// clears that observer's buffer.
  std::optional<std::vector<float>> push(const ObserverFrame& f);
  std::size_t buffered(int observer) const;

 private:
  struct Lane {
    std::optional<std::int64_t> last_t;
    std::deque<std::vector<float>> frames;
  };
  int joints_;
  int window_;
  int stride_;
  std::map<int, Lane> lanes_;
};

struct FilterOutput {
  int action = 0;
  double confidence = 0.0;  // averaged probability of `action`
};

/// Sliding buffer of the last `depth` probability vectors. Nothing comes out
/// until it is full; it is never cleared by an emission.
class PredictionFilter {
 public:
  explicit PredictionFilter(int depth = 3, FilterMode mode = FilterMode::mean);
  std::optional<FilterOutput> push(std::span<const double> probabilities);
  std::size_t size() const noexcept { return history_.size(); }

 private:
  int depth_;
  FilterMode mode_;
  std::deque<std::vector<double>> history_;
};

enum class Decision { emitted, gate_opened, gate_closed, debounced, suppressed, ignored };
std::string_view to_string(Decision d) noexcept;

struct Candidate {
  int observer = 0;
  int action = 0;
  double confidence = 0.0;
  std::int64_t t_ms = 0;
};

/// System-wide gate, debounce clock and observer priority.
class Arbiter {
 public:
  Arbiter(const PipelineConfig& cfg, std::vector<std::string> class_names);

  void note_detection(int observer, std::int64_t t_ms);
  Decision offer(const Candidate& c, std::optional<CommandEvent>* out);

  bool gate_open() const noexcept { return gate_open_; }
  std::optional<std::int64_t> last_emit() const noexcept { return last_emit_; }
  /// True when some observer ranked above `observer` was seen within the
  /// freshness horizon before `t_ms`.
  bool outranked(int observer, std::int64_t t_ms) const;

 private:
  PipelineConfig cfg_;
  std::vector<std::string> names_;
  int gate_action_ = -1;
  bool gate_open_ = false;
  std::optional<std::int64_t> last_emit_;
  std::map<int, std::int64_t> last_seen_;
};

ObserverFrame parse_frame(const nlohmann::json& j);
nlohmann::json frame_to_json(const ObserverFrame& f);

/// Maps one scaled clip to class probabilities.
using Classifier = std::function<std::vector<double>(std::span<const float>)>;

struct CommandTiming {
  std::int64_t t_ms = 0;
  std::string command;
  std::int64_t modeled_response_ms = 0;  // wait window + AR budget
  double measured_response_ms = 0.0;     // wait window + wall inference time
};

struct ReplayResult {
  std::vector<CommandEvent> events;
  std::vector<CommandTiming> timings;
  std::map<std::string, int> decisions;  // Decision name -> count
  int frames = 0;
  int clips = 0;
  std::int64_t modeled_response_ms = 0;

  /// Deterministic content at the top level; wall measurements under "wall".
  nlohmann::json report() const;
};

/// Runs window -> classifier -> filter -> arbiter over a JSON-lines log on
/// its logical timestamps. Frames are taken in log order; every candidate is
/// stamped with its clip's last frame time plus the AR budget. `scale`
/// (optional) is applied to each clip before classification.
ReplayResult replay(std::istream& log, const Classifier& classify, const PipelineConfig& cfg,
                    const std::vector<std::string>& class_names,
                    const std::function<void(std::vector<float>&)>& scale = {});

}  // namespace fedgest::pipeline
