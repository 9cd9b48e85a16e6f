#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "../support.hpp"
#include "fedgest/error.hpp"
#include "fedgest/training.hpp"

using namespace fedgest;
using namespace fedgest::training;

namespace {

// Brute-force check of the stratification contract; returns "" when it holds.
std::string check_batches(const data::Dataset& ds, int b,
                          const std::vector<std::vector<std::size_t>>& batches) {
  const std::size_t n = ds.size();
  std::vector<int> seen(n, 0);
  for (const auto& batch : batches) {
    for (std::size_t i : batch) {
      if (i >= n) return "index out of range";
      if (seen[i]++) return "clip in two batches";
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(n)) return "not a cover";
  const auto hist = ds.class_histogram();
  for (std::size_t k = 0; k < batches.size(); ++k) {
    const bool full = batches[k].size() == static_cast<std::size_t>(b);
    if (!full && k + 1 != batches.size()) return "short batch before the end";
    if (!full) continue;
    std::vector<double> count(hist.size(), 0.0);
    for (std::size_t i : batches[k]) count[ds.clips[i].label] += 1.0;
    for (std::size_t c = 0; c < hist.size(); ++c) {
      const double want = static_cast<double>(b) * hist[c] / n;
      if (std::abs(count[c] - want) > 1.0 + 1e-12) return "class mix off by more than one";
    }
  }
  return "";
}

data::Dataset labeled(std::vector<int> labels, int classes) {
  data::Dataset ds = testing::random_dataset(static_cast<int>(labels.size()), classes, 1, 1, 3);
  for (std::size_t i = 0; i < labels.size(); ++i) ds.clips[i].label = labels[i];
  return ds;
}

// Two-class synthetic set at reduced size so training stays fast.
data::Dataset small_synthetic(int classes, int per_class, double noise, std::uint64_t seed) {
  data::SyntheticConfig sc;
  sc.classes = classes;
  sc.clips_per_class = per_class;
  sc.joints = 5;
  sc.window = 20;
  sc.noise = noise;
  sc.seed = seed;
  const auto ds = data::generate_synthetic(sc);
  return data::apply_scaler(ds, data::fit_scaler(ds));
}

model::ModelConfig model_for(const data::Dataset& ds) {
  model::ModelConfig mc;
  mc.input_width = ds.feature_width();
  mc.window = ds.window;
  mc.classes = ds.class_count();
  return mc;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("12 clips over 3 classes, B = 6: two batches with 2 per class") {
  const auto ds = testing::random_dataset(12, 3, 1, 1, 1);
  const auto batches = stratified_batches(ds, 6, 4);
  REQUIRE(batches.size() == 2);
  for (const auto& b : batches) {
    std::vector<int> h(3, 0);
    for (auto i : b) ++h[ds.clips[i].label];
    CHECK(h == std::vector<int>{2, 2, 2});
  }
  CHECK(check_batches(ds, 6, batches).empty());
}

TEST_CASE("B = |ds| gives one batch holding everything") {
  const auto ds = testing::random_dataset(7, 2, 1, 1, 1);
  const auto batches = stratified_batches(ds, 7, 1);
  REQUIRE(batches.size() == 1);
  std::set<std::size_t> all(batches[0].begin(), batches[0].end());
  CHECK(all.size() == 7);
}

TEST_CASE("stratified_batches errors and determinism") {
  const auto ds = testing::random_dataset(5, 2, 1, 1, 1);
  CHECK_THROWS_AS(stratified_batches(ds, 6, 1), Error);
  CHECK_THROWS_AS(stratified_batches(ds, 0, 1), Error);
  CHECK(stratified_batches(ds, 2, 9) == stratified_batches(ds, 2, 9));
}

TEST_CASE("stratification holds on skewed random datasets") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int classes = std::uniform_int_distribution<int>(1, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 80)(rng);
    std::vector<int> labels(n);
    // Skewed class weights.
    std::vector<double> w(classes);
    for (auto& x : w) x = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    for (auto& l : labels) l = pick(rng);
    const auto ds = labeled(labels, classes);
    const int b = std::uniform_int_distribution<int>(1, n)(rng);
    const auto batches = stratified_batches(ds, b, static_cast<std::uint64_t>(trial));
    INFO("trial " << trial << " n " << n << " b " << b);
    REQUIRE(check_batches(ds, b, batches).empty());
  }
}

TEST_CASE("reduce-on-plateau rules") {
  ReduceLrOnPlateau falling(0.1, 2, 0.5, 1e-6);
  for (int i = 0; i < 50; ++i) CHECK(falling.update(1.0 - 0.01 * i) == 0.1);

  ReduceLrOnPlateau flat(0.1, 3, 0.5, 1e-6);
  for (int i = 0; i < 3; ++i) CHECK(flat.update(1.0) == 0.1);
  CHECK(flat.update(1.0) == doctest::Approx(0.05));  // patience + 1 epochs

  ReduceLrOnPlateau floor(1e-6, 1, 0.5, 1e-6);
  for (int i = 0; i < 10; ++i) CHECK(floor.update(1.0) == 1e-6);

  // Improvements smaller than min_delta do not count.
  ReduceLrOnPlateau tiny(0.1, 2, 0.5, 1e-6, 1e-4);
  tiny.update(1.0);
  tiny.update(1.0 - 5e-5);
  CHECK(tiny.update(1.0 - 9e-5) == doctest::Approx(0.05));
}

TEST_CASE("early stopping rules") {
  const auto mc = testing::tiny_model();
  std::vector<model::ModelParams> snaps;
  for (int i = 0; i < 6; ++i) {
    auto p = model::init_params(mc);
    p.values()[0] = i;
    snaps.push_back(p);
  }
  EarlyStopping es(2);
  const double losses[] = {1.0, 0.5, 0.6, 0.7};
  int stopped_at = 0;
  for (int e = 1; e <= 4; ++e) {
    if (es.update(losses[e - 1], e, snaps[e])) {
      stopped_at = e;
      break;
    }
  }
  CHECK(stopped_at == 4);
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_params() == snaps[2]);

  EarlyStopping mono(3);
  for (int e = 1; e <= 5; ++e) CHECK_FALSE(mono.update(1.0 / e, e, snaps[e]));
  CHECK(mono.best_epoch() == 5);
}

TEST_CASE("TrainConfig validation") {
  TrainConfig c;
  c.validate();
  auto bad = c;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.plateau_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.clip_norm = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("client_train fits a separable two-class set") {
  const auto ds = small_synthetic(2, 10, 0.0, 3);
  const auto mc = model_for(ds);
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 0.05;
  tc.batch_size = 4;
  const auto r = client_train(0, model::init_params(mc), ds, tc);
  CHECK(r.samples == 20);
  CHECK(r.report.final_accuracy == 1.0);
  CHECK(r.report.epochs_run <= 200);
  // Learning progress floor on noise-free data.
  CHECK(*std::min_element(r.report.loss.begin(), r.report.loss.end()) < std::log(13.0) * 0.1);
}

TEST_CASE("client_train report invariants and determinism") {
  const auto ds = small_synthetic(3, 4, 0.01, 5);
  const auto mc = model_for(ds);
  TrainConfig tc;
  tc.epochs = 40;
  tc.plateau_patience = 3;
  tc.early_stop_patience = 15;
  tc.batch_size = 100;  // clamped to the client's 12 clips
  const auto init = model::init_params(mc);
  const auto a = client_train(1, init, ds, tc);
  const auto b = client_train(1, init, ds, tc);
  CHECK(a.params == b.params);
  CHECK(a.report.loss == b.report.loss);

  const auto& rep = a.report;
  CHECK(rep.best_epoch >= 1);
  CHECK(rep.best_epoch <= rep.epochs_run);
  CHECK(rep.loss.size() == static_cast<std::size_t>(rep.epochs_run));
  CHECK(rep.best_loss == *std::min_element(rep.loss.begin(), rep.loss.end()));
  CHECK(rep.loss[rep.best_epoch - 1] == rep.best_loss);
  for (std::size_t i = 1; i < rep.learning_rate.size(); ++i) {
    CHECK(rep.learning_rate[i] <= rep.learning_rate[i - 1]);
    CHECK(rep.learning_rate[i] >= tc.min_learning_rate);
  }
  CHECK(rep.to_csv().rfind("epoch,loss,accuracy,lr\n", 0) == 0);
  const auto j = rep.to_json();
  CHECK(j.at("curves").at("loss").size() == rep.loss.size());
  CHECK(j.contains("timing"));
}

TEST_CASE("client_train errors") {
  const auto ds = small_synthetic(2, 2, 0.0, 1);
  const auto mc = model_for(ds);
  TrainConfig tc;
  tc.epochs = 1;
  try {
    client_train(4, model::init_params(mc), ds.empty_like(), tc);
    FAIL("expected empty error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty);
  }
  auto wrong = mc;
  wrong.input_width = 99;
  try {
    client_train(4, model::init_params(wrong), ds, tc);
    FAIL("expected dimension error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension);
  }
}

}  // TEST_SUITE
