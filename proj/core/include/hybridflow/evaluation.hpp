#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridflow/hybrid.hpp"
#include "hybridflow/pipeline.hpp"

namespace hybridflow::eval {

/// Mean absolute error; throws on empty or unequal inputs.
double mae(std::span<const double> pred, std::span<const double> actual);
/// Root mean squared error; throws on empty or unequal inputs.
double rmse(std::span<const double> pred, std::span<const double> actual);

/// Running sums for one aggregation bucket.
struct Bucket {
  std::size_t count = 0;
  double abs_sum = 0.0;
  double sq_sum = 0.0;

  void add(double residual) {
    ++count;
    abs_sum += residual < 0 ? -residual : residual;
    sq_sum += residual * residual;
  }
  bool defined() const { return count > 0; }
  /// NaN for an empty bucket.
  double mae() const;
  double rmse() const;
};

enum View : unsigned {
  kOverall = 1u << 0,
  kHorizon = 1u << 1,
  kTimeOfDay = 1u << 2,
  kDayOfWeek = 1u << 3,
  kStation = 1u << 4,
  kAllViews = kOverall | kHorizon | kTimeOfDay | kDayOfWeek | kStation,
};

/// Comma-separated subset of: overall, horizon, tod, dow, station, all.
/// The overall bucket is always computed; the flag controls its CSV row.
unsigned parse_views(std::string_view list);

struct EvalReport {
  unsigned views = kOverall;
  Bucket overall;
  std::vector<Bucket> horizon;      ///< h buckets
  std::vector<Bucket> time_of_day;  ///< 288 buckets
  std::vector<Bucket> day_of_week;  ///< 7 buckets, Monday first
  std::vector<Bucket> station;      ///< p buckets
  std::map<std::string, std::string> metadata;

  std::string to_json() const;
  /// One row per bucket: view,bucket,count,mae,rmse,defined.
  void write_csv(std::ostream& out) const;
};

/// Predictions [p*h x batch] for a run of windows.
using Predictor = std::function<Tensor(std::span<const data::WindowSample>)>;

/// Scores predictions over the windows of `days`: inputs come from
/// data.inputs, targets from data.truth, and only reference-observed target
/// cells are counted.
EvalReport evaluate(const Predictor& predictor, const PreparedData& data, data::DayRange days,
                    unsigned views = kOverall);
EvalReport evaluate(hybrid::Model& model, const PreparedData& data, data::DayRange days,
                    unsigned views = kOverall);

Predictor model_predictor(hybrid::Model& model);
/// Repeats the last near-term value over the horizon.
Predictor persistence_predictor();
/// Mean training value per (station, timestamp-of-day), in model units.
Predictor historical_mean_predictor(const PreparedData& data);

}  // namespace hybridflow::eval
