#include <benchmark/benchmark.h>

#include <random>

#include "hybridflow/hybrid.hpp"
#include "hybridflow/imputation.hpp"
#include "hybridflow/synthgen.hpp"
#include "hybridflow/training.hpp"

using namespace hybridflow;

namespace {

data::FlowDataset corridor(std::size_t p, std::size_t days, double missing = 0.0) {
  synth::SynthConfig cfg;
  cfg.p = p;
  cfg.days = days;
  cfg.native_missing_ratio = missing;
  return synth::generate(cfg);
}

// One day of windows, the unit of a training step.
std::vector<data::WindowSample> day_batch(std::size_t p) {
  static const auto ds = corridor(p, 8);
  return data::extract_windows(ds, data::WindowConfig{}, {7, 8});
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM2-SP-CNN3", p, 21, 9), 1);
  const auto batch = hybrid::make_batch(day_batch(p));
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size));
}
BENCHMARK(BM_Forward)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM2-SP-CNN3", p, 21, 9), 1);
  const auto samples = day_batch(p);
  const auto batch = hybrid::make_batch(samples);
  const auto targets = hybrid::make_targets(samples);
  const auto params = model.parameters();
  train::TrainConfig cfg;
  train::AdamState adam;
  for (auto _ : state) {
    ad::Graph g;
    model.zero_grad();
    ad::Var loss = train::mse_loss(model.forward(g, batch, layers::Mode::Train), g.constant(targets.values));
    g.backward(loss);
    train::adam_step(params, adam, cfg);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(BM_TrainStep)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_ExtractWindows(benchmark::State& state) {
  const auto ds = corridor(static_cast<std::size_t>(state.range(0)), 14);
  for (auto _ : state) benchmark::DoNotOptimize(data::extract_windows(ds, data::WindowConfig{}, {7, 14}));
}
BENCHMARK(BM_ExtractWindows)->Arg(8)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_Impute(benchmark::State& state) {
  const auto ds = corridor(8, 60, 0.07);
  const auto method = static_cast<impute::Method>(state.range(0));
  for (auto _ : state) {
    const auto model = impute::ImputationModel::fit(method, ds, {0, 48});
    benchmark::DoNotOptimize(impute::impute(model, ds));
  }
  state.SetLabel(std::string(impute::method_name(method)));
}
BENCHMARK(BM_Impute)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
