#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"
#include "fedgest/pipeline.hpp"

namespace fedgest::pipeline {

PredictionFilter::PredictionFilter(int depth, FilterMode mode) : depth_(depth), mode_(mode) {
  if (depth < 1) throw Error(Errc::range, "filter depth must be >= 1");
}

std::optional<FilterOutput> PredictionFilter::push(std::span<const double> probabilities) {
  if (probabilities.empty()) throw Error(Errc::empty, "empty probability vector");
  if (!history_.empty() && probabilities.size() != history_.front().size()) {
    throw Error(Errc::dimension, "probability vector length changed");
  }
  history_.emplace_back(probabilities.begin(), probabilities.end());
  if (static_cast<int>(history_.size()) > depth_) history_.pop_front();
  if (static_cast<int>(history_.size()) < depth_) return std::nullopt;

  const std::size_t classes = probabilities.size();
  std::vector<double> mean(classes, 0.0);
  for (const auto& h : history_) {
    for (std::size_t c = 0; c < classes; ++c) mean[c] += h[c];
  }
  for (double& m : mean) m /= static_cast<double>(depth_);

  int winner = 0;
  if (mode_ == FilterMode::mean) {
    winner = metrics::argmax(mean);
  } else {
    // Most frequent per-vector argmax; ties go to the lowest id.
    std::vector<int> votes(classes, 0);
    for (const auto& h : history_) ++votes[static_cast<std::size_t>(metrics::argmax(h))];
    for (std::size_t c = 1; c < classes; ++c) {
      if (votes[c] > votes[static_cast<std::size_t>(winner)]) winner = static_cast<int>(c);
    }
  }
  return FilterOutput{winner, mean[static_cast<std::size_t>(winner)]};
}

}  // namespace fedgest::pipeline
