#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridflow/dataset.hpp"

namespace hybridflow::impute {

enum class Method { Mean, Median, Interpolation };

/// Accepts "mean", "median", "interp" (or "interpolation").
Method parse_method(std::string_view name);
std::string_view method_name(Method method);

/// Fill values per (station, timestamp-of-day), fitted across training dates.
///
/// Mean and Median store one table entry per cell. Interpolation keeps the
/// observed (day, value) series per cell and interpolates linearly across
/// dates at query time, clamping to the nearest observation outside the
/// observed span. A cell with no training observation falls back to the
/// station-wide statistic over all training values.
class ImputationModel {
 public:
  static ImputationModel fit(Method method, const data::FlowDataset& ds, data::DayRange train);

  Method method() const noexcept { return method_; }
  std::size_t stations() const noexcept { return stations_; }

  /// Value used for a missing cell of `station` on `day` at timestamp-of-day `tod`.
  double fill_value(std::size_t station, std::size_t day, std::size_t tod) const;
  /// Mean/Median table entry (or station fallback) for a cell.
  double table_value(std::size_t station, std::size_t tod) const;
  bool used_fallback(std::size_t station, std::size_t tod) const;

 private:
  using Series = std::vector<std::pair<std::size_t, double>>;

  Method method_ = Method::Mean;
  std::size_t stations_ = 0;
  std::vector<double> table_;            // [stations x 288]
  std::vector<std::uint8_t> fallback_;   // [stations x 288]
  std::vector<Series> series_;           // [stations x 288], interpolation only
};

/// Fills every missing cell; observed cells are untouched. Output mask is all-observed.
data::FlowDataset impute(const ImputationModel& model, const data::FlowDataset& ds);

enum class Scope { TestOnly, AllData };

Scope parse_scope(std::string_view name);
std::string_view scope_name(Scope scope);

struct MissingPattern {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  Scope scope = Scope::TestOnly;
  data::DayRange days;
  std::size_t scoped_cells = 0;
  std::vector<std::size_t> cells;  ///< flat indices s * T + t, ascending

  std::string to_json() const;
};

struct Injected {
  data::FlowDataset data;
  MissingPattern pattern;
};

/// Removes round(ratio * scoped cells) observed cells, sampled uniformly
/// without replacement inside `days`. Requires 0 <= ratio <= 0.5.
Injected inject_missing(const data::FlowDataset& ds, double ratio, std::uint64_t seed,
                        Scope scope, data::DayRange days);

/// Scope helper: test days under TestOnly, every day under AllData.
data::DayRange scope_days(Scope scope, const data::FlowDataset& ds, const data::DaySplit& split);

}  // namespace hybridflow::impute
