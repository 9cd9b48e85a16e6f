#include <algorithm>
#include <sstream>

#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"

namespace fedgest::metrics {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes),
      counts_(static_cast<std::size_t>(classes) * classes, 0),
      missed_(static_cast<std::size_t>(classes), 0) {
  if (classes < 1) throw Error(Errc::range, "confusion matrix needs >= 1 class");
}

ConfusionMatrix::ConfusionMatrix(int classes, std::vector<std::size_t> counts)
    : ConfusionMatrix(classes) {
  if (counts.size() != counts_.size()) {
    throw Error(Errc::dimension, "confusion counts must be C x C");
  }
  counts_ = std::move(counts);
}

void ConfusionMatrix::add(int truth, int predicted, std::size_t n) {
  if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
    throw Error(Errc::domain, "class index outside the confusion matrix");
  }
  counts_[static_cast<std::size_t>(truth) * classes_ + predicted] += n;
}

void ConfusionMatrix::add_no_detection(int truth, std::size_t n) {
  if (truth < 0 || truth >= classes_) {
    throw Error(Errc::domain, "class index outside the confusion matrix");
  }
  missed_[static_cast<std::size_t>(truth)] += n;
}

std::size_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_.at(static_cast<std::size_t>(truth) * classes_ + predicted);
}

std::size_t ConfusionMatrix::no_detection(int truth) const {
  return missed_.at(static_cast<std::size_t>(truth));
}

std::size_t ConfusionMatrix::row_sum(int truth) const {
  std::size_t s = 0;
  for (int p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::column_sum(int predicted) const {
  std::size_t s = 0;
  for (int t = 0; t < classes_; ++t) s += at(t, predicted);
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (int c = 0; c < classes_; ++c) s += at(c, c);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::size_t ConfusionMatrix::total_no_detection() const {
  std::size_t s = 0;
  for (auto v : missed_) s += v;
  return s;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  return total == 0 ? 0.0 : static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double system_accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total() + cm.total_no_detection();
  return total == 0 ? 0.0 : static_cast<double>(cm.trace()) / static_cast<double>(total);
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }
}  // namespace

Scores precision_f1(const ConfusionMatrix& cm) {
  Scores s;
  const int c_count = cm.classes();
  std::size_t tp_all = 0, pred_all = 0, true_all = 0;
  for (int c = 0; c < c_count; ++c) {
    const auto tp = cm.at(c, c);
    const auto predicted = cm.column_sum(c);
    const auto actual = cm.row_sum(c);
    ClassScore cs;
    cs.precision = ratio(tp, predicted);
    cs.recall = ratio(tp, actual);
    cs.f1 = harmonic(cs.precision, cs.recall);
    s.per_class.push_back(cs);
    s.macro_precision += cs.precision;
    s.macro_recall += cs.recall;
    s.macro_f1 += cs.f1;
    tp_all += tp;
    pred_all += predicted;
    true_all += actual;
  }
  s.macro_precision /= c_count;
  s.macro_recall /= c_count;
  s.macro_f1 /= c_count;
  s.micro_precision = ratio(tp_all, pred_all);
  s.micro_recall = ratio(tp_all, true_all);
  s.micro_f1 = harmonic(s.micro_precision, s.micro_recall);
  return s;
}

int argmax(std::span<const double> p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

nlohmann::json to_json(const Evaluation& ev, const std::vector<std::string>& names) {
  const auto& cm = ev.confusion;
  const Scores s = precision_f1(cm);
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json per_class = nlohmann::json::array();
  for (int t = 0; t < cm.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
    per_class.push_back({{"class", t < static_cast<int>(names.size()) ? names[t] : std::to_string(t)},
                         {"precision", s.per_class[t].precision},
                         {"recall", s.per_class[t].recall},
                         {"f1", s.per_class[t].f1},
                         {"support", cm.row_sum(t)}});
  }
  nlohmann::json missed = nlohmann::json::array();
  for (int t = 0; t < cm.classes(); ++t) missed.push_back(cm.no_detection(t));
  return {{"loss", ev.loss},
          {"accuracy", ev.accuracy},
          {"system_accuracy", system_accuracy(cm)},
          {"samples", cm.total()},
          {"macro", {{"precision", s.macro_precision}, {"recall", s.macro_recall}, {"f1", s.macro_f1}}},
          {"micro", {{"precision", s.micro_precision}, {"recall", s.micro_recall}, {"f1", s.micro_f1}}},
          {"per_class", per_class},
          {"confusion_matrix", rows},
          {"no_detection", missed},
          {"class_names", names}};
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  auto name = [&](int c) {
    std::string n = c < static_cast<int>(names.size()) ? names[c] : std::to_string(c);
    return "\"" + n + "\"";
  };
  std::ostringstream out;
  out << "true\\predicted";
  for (int p = 0; p < cm.classes(); ++p) out << ',' << name(p);
  out << ",no_detection\n";
  for (int t = 0; t < cm.classes(); ++t) {
    out << name(t);
    for (int p = 0; p < cm.classes(); ++p) out << ',' << cm.at(t, p);
    out << ',' << cm.no_detection(t) << '\n';
  }
  return out.str();
}

}  // namespace fedgest::metrics
