#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hybridflow/dataset.hpp"
#include "hybridflow/hybrid.hpp"
#include "hybridflow/imputation.hpp"
#include "hybridflow/training.hpp"

namespace hybridflow::eval {

/// Test error at one injected missing ratio, aggregated over injection seeds.
struct SweepPoint {
  double ratio = 0.0;
  impute::Method method = impute::Method::Mean;
  train::MeanSd mae;
  train::MeanSd rmse;
  std::size_t evaluated_cells = 0;  ///< target cells scored per seed
  std::size_t seeds = 0;
};

/// 0, 0.03, ..., 0.30.
std::vector<double> default_ratio_grid();

/// Complete-train protocol: one trained model; missing values injected into
/// the test days only, filled with `method`, inputs standardized with the
/// model's own statistics. Errors are scored against the pristine data.
std::vector<SweepPoint> sweep_complete_train(hybrid::Model& model,
                                             const data::Standardization& stats,
                                             const data::FlowDataset& pristine,
                                             const data::WindowConfig& window,
                                             impute::Method method,
                                             std::span<const double> ratios,
                                             std::span<const std::uint64_t> seeds);

/// Incomplete-train protocol: for each ratio and seed, missing values are
/// injected across the whole dataset and a fresh model (initialized with
/// that seed) is trained on the imputed data.
std::vector<SweepPoint> sweep_incomplete_train(std::string_view arch,
                                               const data::FlowDataset& pristine,
                                               const data::WindowConfig& window,
                                               impute::Method method,
                                               std::span<const double> ratios,
                                               std::span<const std::uint64_t> seeds,
                                               const train::TrainConfig& cfg);

/// MAE(ratio) / MAE(0) from a sweep containing both points.
double degradation(std::span<const SweepPoint> curve, double ratio);

}  // namespace hybridflow::eval
