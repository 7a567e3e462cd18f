#include "hybridflow/pipeline.hpp"

#include <algorithm>

#include "hybridflow/errors.hpp"

namespace hybridflow {

data::DayRange PreparedData::train_days() const {
  return {std::max(split.train.begin, data::kFirstEligibleDay), split.train.end};
}

PreparedData prepare(const data::FlowDataset& observed, const data::FlowDataset& reference,
                     impute::Method method, const data::WindowConfig& window,
                     std::optional<data::Standardization> stats) {
  window.validate_for_model();
  if (observed.stations != reference.stations ||
      observed.timestamps() != reference.timestamps() ||
      observed.start_date != reference.start_date)
    throw DataError("prepare: observed and reference datasets are not aligned");

  PreparedData out;
  out.window = window;
  out.method = method;
  const data::FlowDataset cleaned = data::clean(observed);
  out.split = data::split(cleaned);
  if (out.split.val.begin < data::kFirstEligibleDay + 1)
    throw DataError("prepare: " + std::to_string(cleaned.days()) +
                    " days leave no training day with a week of history");

  out.stats = stats ? std::move(*stats) : data::fit_standardization(cleaned, out.split.train);
  const auto imputer = impute::ImputationModel::fit(method, cleaned, out.split.train);
  out.inputs = out.stats.apply(impute::impute(imputer, cleaned));
  out.truth = out.stats.apply(data::clean(reference));
  return out;
}

}  // namespace hybridflow
