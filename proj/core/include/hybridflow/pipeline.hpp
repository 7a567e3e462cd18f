#pragma once

#include <optional>

#include "hybridflow/dataset.hpp"
#include "hybridflow/imputation.hpp"

namespace hybridflow {

/// Model-ready data: clean -> split -> impute (raw units) -> standardize.
struct PreparedData {
  data::FlowDataset inputs;  ///< imputed and standardized; fully observed
  data::FlowDataset truth;   ///< reference values in the same units, reference mask
  data::DaySplit split;
  data::Standardization stats;
  data::WindowConfig window;
  impute::Method method = impute::Method::Mean;

  /// Training days that have a week of history.
  data::DayRange train_days() const;
  data::DayRange val_days() const { return split.val; }
  data::DayRange test_days() const { return split.test; }
};

/// `observed` feeds imputation and inputs; `reference` supplies evaluation
/// targets (pass the same dataset twice when nothing was injected). When
/// `stats` is empty they are fitted on the observed training days.
PreparedData prepare(const data::FlowDataset& observed, const data::FlowDataset& reference,
                     impute::Method method, const data::WindowConfig& window,
                     std::optional<data::Standardization> stats = std::nullopt);

inline PreparedData prepare(const data::FlowDataset& ds, impute::Method method,
                            const data::WindowConfig& window) {
  return prepare(ds, ds, method, window);
}

}  // namespace hybridflow
