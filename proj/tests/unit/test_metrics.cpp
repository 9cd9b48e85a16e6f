#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support.hpp"
#include "fedgest/error.hpp"
#include "fedgest/metrics.hpp"

using namespace fedgest;
using namespace fedgest::metrics;

TEST_SUITE("metrics") {

TEST_CASE("diagonal matrix scores 1 everywhere") {
  ConfusionMatrix cm(4);
  for (int c = 0; c < 4; ++c) cm.add(c, c, 5 + c);
  const auto s = precision_f1(cm);
  CHECK(s.macro_precision == 1.0);
  CHECK(s.macro_recall == 1.0);
  CHECK(s.macro_f1 == 1.0);
  CHECK(s.micro_f1 == 1.0);
  CHECK(accuracy(cm) == 1.0);
}

TEST_CASE("[[8,2],[2,8]] scores 0.8 everywhere") {
  const ConfusionMatrix cm(2, {8, 2, 2, 8});
  const auto s = precision_f1(cm);
  for (const auto& c : s.per_class) {
    CHECK(c.precision == doctest::Approx(0.8));
    CHECK(c.recall == doctest::Approx(0.8));
    CHECK(c.f1 == doctest::Approx(0.8));
  }
  CHECK(s.macro_precision == doctest::Approx(0.8));
  CHECK(s.macro_recall == doctest::Approx(0.8));
  CHECK(s.macro_f1 == doctest::Approx(0.8));
  CHECK(s.micro_precision == doctest::Approx(0.8));
  CHECK(accuracy(cm) == doctest::Approx(0.8));
}

TEST_CASE("a class never predicted has precision 0") {
  const ConfusionMatrix cm(3, {4, 0, 0, 3, 0, 0, 0, 0, 5});
  const auto s = precision_f1(cm);
  CHECK(s.per_class[1].precision == 0.0);
  CHECK(s.per_class[1].recall == 0.0);
  CHECK(s.per_class[1].f1 == 0.0);
}

TEST_CASE("random matrices: identities against brute force") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = std::uniform_int_distribution<int>(1, 13)(rng);
    std::vector<std::size_t> counts(static_cast<std::size_t>(c) * c);
    for (auto& v : counts) v = std::uniform_int_distribution<std::size_t>(0, 9)(rng);
    const ConfusionMatrix cm(c, counts);
    std::size_t trace = 0, total = 0;
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) {
        total += counts[i * c + j];
        if (i == j) trace += counts[i * c + j];
      }
    }
    CHECK(cm.trace() == trace);
    CHECK(cm.total() == total);
    CHECK(accuracy(cm) == (total ? static_cast<double>(trace) / total : 0.0));
    const auto s = precision_f1(cm);
    for (const auto& k : s.per_class) {
      for (double v : {k.precision, k.recall, k.f1}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    for (double v : {s.macro_precision, s.macro_recall, s.macro_f1, s.micro_precision,
                     s.micro_recall, s.micro_f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("no-detection column stays out of model scores") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 6);
  cm.add(1, 1, 4);
  cm.add_no_detection(0, 5);
  CHECK(accuracy(cm) == 1.0);
  CHECK(system_accuracy(cm) == doctest::Approx(10.0 / 15.0));
  CHECK(precision_f1(cm).macro_precision == 1.0);
  CHECK(cm.row_sum(0) == 6);
  CHECK(cm.no_detection(0) == 5);
  CHECK(cm.total_no_detection() == 5);
  CHECK_THROWS_AS(cm.add(2, 0), Error);
}

TEST_CASE("argmax ties go to the lowest id") {
  const std::vector<double> p{0.2, 0.4, 0.4};
  CHECK(argmax(p) == 1);
}

TEST_CASE("evaluate: perfect, mislabeled and chance-level predictors") {
  // Bias-only model: zero kernels, output bias selects class 1.
  auto mc = testing::tiny_model(2, 3, 3);
  auto p = model::unflatten(mc, std::vector<double>(model::parameter_count(mc), 0.0));
  p.tensor(model::Tensor::dense3_bias)[1] = 30.0;
  auto ds = testing::random_dataset(9, 3, 2, 3, 1);
  for (auto& c : ds.clips) c.label = 1;
  ds.classes = data::default_classes(3);
  const auto perfect = evaluate(p, ds);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion.at(1, 1) == 9);
  CHECK(perfect.confusion.row_sum(1) == 9);
  for (auto& c : ds.clips) c.label = 2;
  const auto wrong = evaluate(p, ds);
  CHECK(wrong.accuracy == 0.0);
  CHECK(wrong.confusion.row_sum(2) == 9);

  auto empty = ds.empty_like();
  try {
    evaluate(p, empty);
    FAIL("expected empty error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty);
  }
}

TEST_CASE("random-weight model is near chance on balanced 13-class data") {
  model::ModelConfig mc;
  mc.input_width = 6;
  mc.window = 4;
  // Average over several random models: one model may collapse onto a class.
  double acc = 0.0;
  const int models = 8;
  const auto ds = testing::random_dataset(13 * 40, 13, 2, 4, 5);
  for (int m = 0; m < models; ++m) {
    mc.init_seed = 100 + m;
    acc += evaluate(model::init_params(mc), ds).accuracy;
  }
  CHECK(std::abs(acc / models - 1.0 / 13.0) < 0.05);
}

TEST_CASE("OpenMP evaluate matches the serial reference bitwise") {
  const model::ModelConfig mc;
  const auto p = model::init_params(mc);
  const auto ds = testing::random_dataset(10, 13, 33, 60, 2);
  const auto s = evaluate_serial(p, ds);
  for (int threads : {1, 3}) {
    const auto o = evaluate(p, ds, threads);
    CHECK(o.loss == s.loss);
    CHECK(o.accuracy == s.accuracy);
    CHECK(o.confusion == s.confusion);
  }
}

TEST_CASE("JSON and CSV exports") {
  const ConfusionMatrix cm(2, {8, 2, 2, 8});
  Evaluation ev{0.5, 0.8, cm};
  const auto j = to_json(ev, {"a", "b"});
  CHECK(j.at("accuracy") == 0.8);
  CHECK(j.dump().find("macro") != std::string::npos);
  const auto csv = confusion_csv(cm, {"a", "b"});
  CHECK(csv.find("a") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3);
}

}  // TEST_SUITE
