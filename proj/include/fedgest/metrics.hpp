#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgest/data.hpp"
#include "fedgest/model.hpp"

namespace fedgest::metrics {

/// C x C counts, rows = true class, columns = predicted class, plus a
/// separate "no detection" column for samples the system never classified.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);
  ConfusionMatrix(int classes, std::vector<std::size_t> counts);

  void add(int truth, int predicted, std::size_t n = 1);
  void add_no_detection(int truth, std::size_t n = 1);

  int classes() const noexcept { return classes_; }
  std::size_t at(int truth, int predicted) const;
  std::size_t no_detection(int truth) const;
  std::size_t row_sum(int truth) const;  // excludes no-detection
  std::size_t column_sum(int predicted) const;
  std::size_t trace() const;
  std::size_t total() const;  // classified samples only
  std::size_t total_no_detection() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int classes_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> missed_;
};

/// trace / total over classified samples; 0 when empty.
double accuracy(const ConfusionMatrix& cm);
/// trace / (classified + no-detection).
double system_accuracy(const ConfusionMatrix& cm);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Scores {
  std::vector<ClassScore> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
};

/// Per-class precision/recall/F1 with 0/0 -> 0, macro-averaged over all
/// classes; micro averages are pooled counts. No-detection samples are not
/// part of these model-quality scores.
Scores precision_f1(const ConfusionMatrix& cm);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion{1};
};

/// Ties in argmax go to the lowest class id.
int argmax(std::span<const double> p);

/// Mean cross-entropy, accuracy and confusion matrix in infer mode. Clips are
/// scored in parallel and reduced in index order.
Evaluation evaluate(const model::ModelParams& params, const data::Dataset& ds,
                    int threads = 0);
Evaluation evaluate_serial(const model::ModelParams& params, const data::Dataset& ds);

nlohmann::json to_json(const Evaluation& ev, const std::vector<std::string>& names);
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names);

}  // namespace fedgest::metrics
