#include "hybridflow/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "hybridflow/errors.hpp"

namespace hybridflow::impute {

using data::kPointsPerDay;

Method parse_method(std::string_view name) {
  if (name == "mean") return Method::Mean;
  if (name == "median") return Method::Median;
  if (name == "interp" || name == "interpolation") return Method::Interpolation;
  throw UsageError("unknown imputation method '" + std::string(name) +
                   "'; expected mean, median or interp");
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Mean: return "mean";
    case Method::Median: return "median";
    case Method::Interpolation: return "interp";
  }
  return "?";
}

Scope parse_scope(std::string_view name) {
  if (name == "test") return Scope::TestOnly;
  if (name == "all") return Scope::AllData;
  throw UsageError("unknown scope '" + std::string(name) + "'; expected test or all");
}

std::string_view scope_name(Scope scope) { return scope == Scope::TestOnly ? "test" : "all"; }

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

ImputationModel ImputationModel::fit(Method method, const data::FlowDataset& ds,
                                     data::DayRange train) {
  if (train.size() == 0 || train.end > ds.days())
    throw UsageError("imputation fit: empty or out-of-range training days");
  ImputationModel model;
  model.method_ = method;
  model.stations_ = ds.stations_count();
  const std::size_t p = model.stations_;
  model.table_.assign(p * kPointsPerDay, 0.0);
  model.fallback_.assign(p * kPointsPerDay, 0);
  if (method == Method::Interpolation) model.series_.assign(p * kPointsPerDay, {});

  std::vector<double> values;
  std::vector<double> station_values;
  for (std::size_t s = 0; s < p; ++s) {
    station_values.clear();
    for (std::size_t t = train.begin * kPointsPerDay; t < train.end * kPointsPerDay; ++t)
      if (ds.observed(s, t)) station_values.push_back(ds.value(s, t));
    if (station_values.empty())
      throw DataError("imputation fit: station " + ds.stations[s].id +
                      " has no observed training values");
    const double station_stat =
        method == Method::Median ? median_of(station_values) : mean_of(station_values);

    for (std::size_t tod = 0; tod < kPointsPerDay; ++tod) {
      const std::size_t cell = s * kPointsPerDay + tod;
      values.clear();
      for (std::size_t d = train.begin; d < train.end; ++d) {
        const std::size_t t = d * kPointsPerDay + tod;
        if (!ds.observed(s, t)) continue;
        values.push_back(ds.value(s, t));
        if (method == Method::Interpolation) model.series_[cell].emplace_back(d, ds.value(s, t));
      }
      if (values.empty()) {
        model.table_[cell] = station_stat;
        model.fallback_[cell] = 1;
      } else {
        model.table_[cell] = method == Method::Median ? median_of(values) : mean_of(values);
      }
    }
  }
  return model;
}

double ImputationModel::table_value(std::size_t station, std::size_t tod) const {
  return table_[station * kPointsPerDay + tod];
}

bool ImputationModel::used_fallback(std::size_t station, std::size_t tod) const {
  return fallback_[station * kPointsPerDay + tod] != 0;
}

double ImputationModel::fill_value(std::size_t station, std::size_t day, std::size_t tod) const {
  const std::size_t cell = station * kPointsPerDay + tod;
  if (method_ != Method::Interpolation || fallback_[cell]) return table_[cell];
  const Series& series = series_[cell];
  auto after = std::lower_bound(series.begin(), series.end(), day,
                                [](const auto& entry, std::size_t d) { return entry.first < d; });
  if (after == series.begin()) return series.front().second;
  if (after == series.end()) return series.back().second;
  if (after->first == day) return after->second;
  const auto before = std::prev(after);
  const double span = static_cast<double>(after->first - before->first);
  return before->second +
         (after->second - before->second) * static_cast<double>(day - before->first) / span;
}

data::FlowDataset impute(const ImputationModel& model, const data::FlowDataset& ds) {
  if (model.stations() != ds.stations_count())
    throw DataError("impute: model fitted on " + std::to_string(model.stations()) +
                    " stations, dataset has " + std::to_string(ds.stations_count()));
  data::FlowDataset out = ds;
  for (std::size_t s = 0; s < out.stations_count(); ++s)
    for (std::size_t t = 0; t < out.timestamps(); ++t)
      if (!out.observed(s, t))
        out.set_observed(s, t, model.fill_value(s, t / kPointsPerDay, t % kPointsPerDay));
  return out;
}

data::DayRange scope_days(Scope scope, const data::FlowDataset& ds, const data::DaySplit& split) {
  return scope == Scope::TestOnly ? split.test : data::DayRange{0, ds.days()};
}

Injected inject_missing(const data::FlowDataset& ds, double ratio, std::uint64_t seed,
                        Scope scope, data::DayRange days) {
  if (!(ratio >= 0.0 && ratio <= 0.5))
    throw UsageError("inject_missing: ratio must lie in [0, 0.5], got " + std::to_string(ratio));
  if (days.end > ds.days() || days.begin > days.end)
    throw UsageError("inject_missing: day range outside dataset");
  const std::size_t T = ds.timestamps();
  const std::size_t t0 = days.begin * kPointsPerDay;
  const std::size_t t1 = days.end * kPointsPerDay;

  MissingPattern pattern;
  pattern.ratio = ratio;
  pattern.seed = seed;
  pattern.scope = scope;
  pattern.days = days;
  pattern.scoped_cells = ds.stations_count() * (t1 - t0);
  const auto target =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pattern.scoped_cells)));

  std::vector<std::size_t> candidates;
  for (std::size_t s = 0; s < ds.stations_count(); ++s)
    for (std::size_t t = t0; t < t1; ++t)
      if (ds.observed(s, t)) candidates.push_back(s * T + t);
  if (target > candidates.size())
    throw UsageError("inject_missing: ratio " + std::to_string(ratio) + " needs " +
                     std::to_string(target) + " cells but only " +
                     std::to_string(candidates.size()) + " are observed in scope");

  // Partial Fisher-Yates.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  candidates.resize(target);
  std::sort(candidates.begin(), candidates.end());

  data::FlowDataset out = ds;
  for (std::size_t cell : candidates) out.set_missing(cell / T, cell % T);
  pattern.cells = std::move(candidates);
  return {std::move(out), std::move(pattern)};
}

std::string MissingPattern::to_json() const {
  nlohmann::json j{{"ratio", ratio},
                   {"seed", seed},
                   {"scope", std::string(scope_name(scope))},
                   {"days", {days.begin, days.end}},
                   {"scoped_cells", scoped_cells},
                   {"cell_count", cells.size()}};
  return j.dump();
}

}  // namespace hybridflow::impute
