#include <cctype>
#include <cmath>

#include "fedgest/error.hpp"
#include "fedgest/pipeline.hpp"

namespace fedgest::pipeline {

void PipelineConfig::validate() const {
  if (joints < 1 || window < 1) throw Error(Errc::range, "joints and window must be >= 1");
  if (stride < 0 || stride > window) throw Error(Errc::range, "stride must lie in [0, window]");
  if (filter_depth < 1) throw Error(Errc::range, "filter depth must be >= 1");
  if (wait_window_ms < 0) throw Error(Errc::range, "wait window must be >= 0");
  if (ar_budget_ms < 0 || freshness_ms < 0) {
    throw Error(Errc::range, "AR budget and freshness must be >= 0");
  }
  if (priority.empty()) throw Error(Errc::range, "priority list needs at least one observer");
}

std::string default_command(const std::string& action) {
  std::string out;
  for (char ch : action) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      out += static_cast<char>(std::toupper(c));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

StreamAssembler::StreamAssembler(const PipelineConfig& cfg)
    : joints_(cfg.joints), window_(cfg.window), stride_(cfg.effective_stride()) {
  cfg.validate();
}

std::size_t StreamAssembler::buffered(int observer) const {
  const auto it = lanes_.find(observer);
  return it == lanes_.end() ? 0 : it->second.frames.size();
}

std::optional<std::vector<float>> StreamAssembler::push(const ObserverFrame& f) {
  Lane& lane = lanes_[f.observer];
  if (lane.last_t && f.t_ms <= *lane.last_t) {
    throw Error(Errc::order, "observer " + std::to_string(f.observer) + ": timestamp " +
                                 std::to_string(f.t_ms) + " ms does not follow " +
                                 std::to_string(*lane.last_t) + " ms");
  }
  lane.last_t = f.t_ms;
  if (!f.detected) {
    lane.frames.clear();
    return std::nullopt;
  }
  if (f.keypoints.joint_count() != joints_) {
    throw Error(Errc::dimension, "observer " + std::to_string(f.observer) + " frame at " +
                                     std::to_string(f.t_ms) + " ms has " +
                                     std::to_string(f.keypoints.joint_count()) +
                                     " joints, expected " + std::to_string(joints_));
  }
  std::vector<float> row;
  row.reserve(static_cast<std::size_t>(joints_) * 3);
  for (const auto& j : f.keypoints.joints) {
    for (double v : j) {
      if (!std::isfinite(v)) {
        throw Error(Errc::domain, "non-finite keypoint at " + std::to_string(f.t_ms) + " ms");
      }
      row.push_back(static_cast<float>(v));
    }
  }
  lane.frames.push_back(std::move(row));
  if (static_cast<int>(lane.frames.size()) < window_) return std::nullopt;

  std::vector<float> clip;
  clip.reserve(static_cast<std::size_t>(window_) * joints_ * 3);
  for (const auto& r : lane.frames) clip.insert(clip.end(), r.begin(), r.end());
  for (int i = 0; i < stride_; ++i) lane.frames.pop_front();
  return clip;
}

}  // namespace fedgest::pipeline
