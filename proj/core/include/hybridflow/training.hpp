#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridflow/autodiff.hpp"
#include "hybridflow/hybrid.hpp"
#include "hybridflow/pipeline.hpp"

namespace hybridflow::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  double l2 = 1e-4;
  std::size_t max_epochs = 30;
  std::size_t runs = 5;
  /// One seed per run; when empty, runs use 1..runs.
  std::vector<std::uint64_t> seeds;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  std::vector<std::uint64_t> run_seeds() const;
};

/// Mean squared error over all entries.
ad::Var mse_loss(ad::Var pred, ad::Var target);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

/// One Adam update from each parameter's grad, with the L2 term l2 * theta
/// added to the gradient first. Throws NumericError on a non-finite gradient.
void adam_step(std::span<ad::Parameter* const> params, AdamState& state, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double wall_seconds = 0.0;
  std::string checkpoint_id;

  /// One JSON object per epoch.
  std::string to_jsonl() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Chronological day batches, one Adam step per day, validation after each
/// epoch; the model ends holding the parameters of the best-validation-MAE epoch.
TrainLog train(hybrid::Model& model, const PreparedData& data, const TrainConfig& cfg,
               const EpochCallback& on_epoch = {});

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  ///< sample standard deviation; 0 for a single value
};
MeanSd mean_sd(std::span<const double> values);

struct RunResult {
  std::uint64_t seed = 0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double test_mae = 0.0;
  double test_rmse = 0.0;
  TrainLog log;
  hybrid::Model model;
};

struct ExperimentResult {
  std::string arch;
  std::vector<RunResult> runs;
  MeanSd val_mae, val_rmse, test_mae, test_rmse;
};

/// Trains cfg.runs independently seeded models and aggregates their
/// validation and test metrics (standardized units).
ExperimentResult run_experiment(std::string_view arch, const PreparedData& data,
                                const TrainConfig& cfg, const EpochCallback& on_epoch = {});
ExperimentResult run_experiment(std::string_view arch, const data::FlowDataset& dataset,
                                impute::Method method, const data::WindowConfig& window,
                                const TrainConfig& cfg);

}  // namespace hybridflow::train
