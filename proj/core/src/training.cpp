#include "hybridflow/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hybridflow/errors.hpp"
#include "hybridflow/evaluation.hpp"

namespace hybridflow::train {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw UsageError("train: learning rate must be non-negative");
  if (!(l2 >= 0.0)) throw UsageError("train: l2 must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw UsageError("train: Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw UsageError("train: Adam epsilon must be positive");
  if (max_epochs == 0) throw UsageError("train: max_epochs must be at least 1");
  if (runs == 0) throw UsageError("train: runs must be at least 1");
  if (!seeds.empty() && seeds.size() != runs)
    throw UsageError("train: " + std::to_string(seeds.size()) + " seeds given for " +
                     std::to_string(runs) + " runs");
}

std::vector<std::uint64_t> TrainConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(runs);
  std::iota(out.begin(), out.end(), std::uint64_t{1});
  return out;
}

ad::Var mse_loss(ad::Var pred, ad::Var target) {
  ad::Var diff = ad::sub(pred, target);
  return ad::mean(ad::mul(diff, diff));
}

void adam_step(std::span<ad::Parameter* const> params, AdamState& state, const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size())
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* p = params[i];
    if (p->grad.shape() != p->value.shape() || state.m[i].shape() != p->value.shape())
      throw DimensionError("adam_step: shape mismatch for " + p->name);
    if (!p->grad.all_finite())
      throw NumericError("adam_step: non-finite gradient in " + p->name + " at step " +
                         std::to_string(state.step + 1));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j] + cfg.l2 * p.value[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"val_mae", e.val_mae},
                     {"val_rmse", e.val_rmse},
                     {"seconds", e.seconds},
                     {"best", e.epoch == best_epoch}};
    if (!checkpoint_id.empty()) j["checkpoint"] = checkpoint_id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TrainLog train(hybrid::Model& model, const PreparedData& data, const TrainConfig& cfg,
               const EpochCallback& on_epoch) {
  cfg.validate();
  const data::DayRange days = data.train_days();
  if (days.size() == 0) throw DataError("train: no eligible training days");
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  const auto params = model.parameters();
  AdamState state;
  TrainLog log;
  double best_mae = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = clock::now();
    double loss_sum = 0.0;
    for (std::size_t day = days.begin; day < days.end; ++day) {
      const auto samples = data::extract_windows(data.inputs, data.window, {day, day + 1});
      const hybrid::Batch batch = hybrid::make_batch(samples);
      const hybrid::TargetBlock targets = hybrid::make_targets(samples);

      ad::Graph graph;
      model.zero_grad();
      ad::Var pred = model.forward(graph, batch, layers::Mode::Train);
      ad::Var loss = mse_loss(pred, graph.constant(targets.values));
      const double value = loss.value()[0];
      if (!std::isfinite(value))
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) + ", day " +
                           std::to_string(day));
      graph.backward(loss);
      adam_step(params, state, cfg);
      loss_sum += value;
    }

    const eval::EvalReport val = eval::evaluate(model, data, data.val_days());
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(days.size());
    entry.val_mae = val.overall.mae();
    entry.val_rmse = val.overall.rmse();
    entry.seconds = std::chrono::duration<double>(clock::now() - epoch_start).count();
    log.epochs.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.val_mae < best_mae || best_values.empty()) {
      best_mae = entry.val_mae;
      log.best_epoch = epoch;
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  log.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();
  return log;
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) throw UsageError("mean_sd: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / (n - 1.0))};
}

ExperimentResult run_experiment(std::string_view arch, const PreparedData& data,
                                const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const hybrid::ModelSpec spec = hybrid::ModelSpec::make(
      arch, data.inputs.stations_count(), data.window.n, data.window.h);
  ExperimentResult result;
  result.arch = spec.arch;
  for (std::uint64_t seed : cfg.run_seeds()) {
    RunResult run;
    run.seed = seed;
    run.model = hybrid::Model::build(spec, seed);
    run.log = train(run.model, data, cfg, on_epoch);
    const auto val = eval::evaluate(run.model, data, data.val_days());
    const auto test = eval::evaluate(run.model, data, data.test_days());
    run.val_mae = val.overall.mae();
    run.val_rmse = val.overall.rmse();
    run.test_mae = test.overall.mae();
    run.test_rmse = test.overall.rmse();
    result.runs.push_back(std::move(run));
  }
  auto collect = [&](double RunResult::*field) {
    std::vector<double> v;
    for (const auto& r : result.runs) v.push_back(r.*field);
    return mean_sd(v);
  };
  result.val_mae = collect(&RunResult::val_mae);
  result.val_rmse = collect(&RunResult::val_rmse);
  result.test_mae = collect(&RunResult::test_mae);
  result.test_rmse = collect(&RunResult::test_rmse);
  return result;
}

ExperimentResult run_experiment(std::string_view arch, const data::FlowDataset& dataset,
                                impute::Method method, const data::WindowConfig& window,
                                const TrainConfig& cfg) {
  return run_experiment(arch, prepare(dataset, method, window), cfg);
}

}  // namespace hybridflow::train
