// Serial reference vs OpenMP kernels on the default model size. Thread count
// is the benchmark argument; 0 selects the serial reference.

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "../tests/support.hpp"
#include "fedgest/federation.hpp"
#include "fedgest/metrics.hpp"

using namespace fedgest;

namespace {

const model::ModelConfig& default_model() {
  static const model::ModelConfig mc;
  return mc;
}

const model::ModelParams& default_params() {
  static const auto p = model::init_params(default_model());
  return p;
}

void BM_Backward(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  const auto batch = testing::random_batch(default_model(), 32, 1);
  for (auto _ : state) {
    auto g = threads == 0 ? model::backward_serial(default_params(), batch.examples, 7)
                          : model::backward(default_params(), batch.examples, 7, threads);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}

void BM_Evaluate(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  const auto& mc = default_model();
  static const auto ds = testing::random_dataset(64, mc.classes, mc.input_width / 3, mc.window, 2);
  for (auto _ : state) {
    auto ev = threads == 0 ? metrics::evaluate_serial(default_params(), ds)
                           : metrics::evaluate(default_params(), ds, threads);
    benchmark::DoNotOptimize(ev.accuracy);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}

void BM_Aggregate(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  std::vector<federation::ClientUpdate> ups(5);
  Rng rng(3);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (std::size_t k = 0; k < ups.size(); ++k) {
    ups[k].params.resize(model::parameter_count(default_model()));
    for (auto& v : ups[k].params) v = n(rng);
    ups[k].samples = static_cast<std::uint32_t>(50 + 10 * k);
  }
  for (auto _ : state) {
    auto w = threads == 0 ? federation::aggregate_serial(ups) : federation::aggregate(ups, threads);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(ups.size()) *
                          static_cast<std::int64_t>(ups[0].params.size() * sizeof(float)));
}

}  // namespace

BENCHMARK(BM_Backward)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Aggregate)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMicrosecond);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
