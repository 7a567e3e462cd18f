#include "hybridflow/evaluation.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "hybridflow/errors.hpp"
#include "hybridflow/imputation.hpp"

namespace hybridflow::eval {

using data::kPointsPerDay;

namespace {

void check_series(std::span<const double> pred, std::span<const double> actual, const char* what) {
  if (pred.empty()) throw UsageError(std::string(what) + ": empty input");
  if (pred.size() != actual.size())
    throw DimensionError(std::string(what) + ": lengths differ (" + std::to_string(pred.size()) +
                         " vs " + std::to_string(actual.size()) + ")");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> actual) {
  check_series(pred, actual, "mae");
  Bucket b;
  for (std::size_t i = 0; i < pred.size(); ++i) b.add(actual[i] - pred[i]);
  return b.mae();
}

double rmse(std::span<const double> pred, std::span<const double> actual) {
  check_series(pred, actual, "rmse");
  Bucket b;
  for (std::size_t i = 0; i < pred.size(); ++i) b.add(actual[i] - pred[i]);
  return b.rmse();
}

double Bucket::mae() const {
  return count ? abs_sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

double Bucket::rmse() const {
  return count ? std::sqrt(sq_sum / static_cast<double>(count))
               : std::numeric_limits<double>::quiet_NaN();
}

unsigned parse_views(std::string_view list) {
  unsigned views = 0;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string_view item = list.substr(start, comma - start);
    if (item.empty()) {
    } else if (item == "overall") {
      views |= kOverall;
    } else if (item == "horizon") {
      views |= kHorizon;
    } else if (item == "tod" || item == "timestamp") {
      views |= kTimeOfDay;
    } else if (item == "dow" || item == "day") {
      views |= kDayOfWeek;
    } else if (item == "station") {
      views |= kStation;
    } else if (item == "all") {
      views |= kAllViews;
    } else {
      throw UsageError("unknown view '" + std::string(item) +
                       "'; expected overall, horizon, tod, dow, station or all");
    }
    start = comma + 1;
  }
  return views ? views : unsigned{kOverall};
}

namespace {

nlohmann::json bucket_json(const Bucket& b) {
  nlohmann::json j{{"count", b.count}};
  if (b.defined()) {
    j["mae"] = b.mae();
    j["rmse"] = b.rmse();
  } else {
    j["mae"] = nullptr;
    j["rmse"] = nullptr;
  }
  j["defined"] = b.defined();
  return j;
}

void csv_row(std::ostream& out, std::string_view view, std::size_t index, const Bucket& b) {
  out << view << ',' << index << ',' << b.count << ',';
  if (b.defined()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,1", b.mae(), b.rmse());
    out << buf;
  } else {
    out << ",,0";
  }
  out << '\n';
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["metadata"] = metadata;
  j["overall"] = bucket_json(overall);
  auto list = [](const std::vector<Bucket>& buckets) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : buckets) arr.push_back(bucket_json(b));
    return arr;
  };
  if (views & kHorizon) j["horizon"] = list(horizon);
  if (views & kTimeOfDay) j["time_of_day"] = list(time_of_day);
  if (views & kDayOfWeek) j["day_of_week"] = list(day_of_week);
  if (views & kStation) j["station"] = list(station);
  return j.dump(2);
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "view,bucket,count,mae,rmse,defined\n";
  if (views & kOverall) csv_row(out, "overall", 0, overall);
  auto rows = [&](std::string_view name, const std::vector<Bucket>& buckets) {
    for (std::size_t i = 0; i < buckets.size(); ++i) csv_row(out, name, i, buckets[i]);
  };
  if (views & kHorizon) rows("horizon", horizon);
  if (views & kTimeOfDay) rows("tod", time_of_day);
  if (views & kDayOfWeek) rows("dow", day_of_week);
  if (views & kStation) rows("station", station);
}

EvalReport evaluate(const Predictor& predictor, const PreparedData& data, data::DayRange days,
                    unsigned views) {
  const data::WindowConfig& cfg = data.window;
  const std::size_t p = data.truth.stations_count();
  const std::size_t h = cfg.h;
  EvalReport report;
  report.views = views;
  if (views & kHorizon) report.horizon.assign(h, {});
  if (views & kTimeOfDay) report.time_of_day.assign(kPointsPerDay, {});
  if (views & kDayOfWeek) report.day_of_week.assign(7, {});
  if (views & kStation) report.station.assign(p, {});

  for (std::size_t day = days.begin; day < days.end; ++day) {
    const data::DayRange one{day, day + 1};
    const auto inputs = data::extract_windows(data.inputs, cfg, one);
    const auto truth = data::extract_windows(data.truth, cfg, one);
    const Tensor pred = predictor(inputs);
    const std::size_t B = inputs.size();
    if (pred.shape() != Shape{p * h, B})
      throw DimensionError("evaluate: predictor returned " + shape_string(pred.shape()) +
                           ", expected " + shape_string({p * h, B}));
    for (std::size_t b = 0; b < B; ++b) {
      const data::WindowSample& w = truth[b];
      for (std::size_t s = 0; s < p; ++s) {
        for (std::size_t k = 0; k < h; ++k) {
          const std::size_t r = s * h + k;
          if (!w.target_mask[r]) continue;
          const double residual = pred[r * B + b] - w.target[r];
          const std::size_t t = w.t + k;
          report.overall.add(residual);
          if (views & kHorizon) report.horizon[k].add(residual);
          if (views & kTimeOfDay) report.time_of_day[t % kPointsPerDay].add(residual);
          if (views & kDayOfWeek)
            report.day_of_week[data.truth.weekday(t / kPointsPerDay)].add(residual);
          if (views & kStation) report.station[s].add(residual);
        }
      }
    }
  }
  return report;
}

Predictor model_predictor(hybrid::Model& model) {
  return [&model](std::span<const data::WindowSample> samples) {
    return model.predict(hybrid::make_batch(samples));
  };
}

EvalReport evaluate(hybrid::Model& model, const PreparedData& data, data::DayRange days,
                    unsigned views) {
  EvalReport report = evaluate(model_predictor(model), data, days, views);
  report.metadata["arch"] = model.spec().arch;
  report.metadata["imputation"] = std::string(impute::method_name(data.method));
  return report;
}

Predictor persistence_predictor() {
  return [](std::span<const data::WindowSample> samples) {
    const std::size_t p = samples[0].s.dim(0);
    const std::size_t n = samples[0].s.dim(1);
    const std::size_t h = samples[0].target.dim(1);
    const std::size_t B = samples.size();
    Tensor out({p * h, B});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < p; ++s)
        for (std::size_t k = 0; k < h; ++k) out[(s * h + k) * B + b] = samples[b].s[s * n + n - 1];
    return out;
  };
}

Predictor historical_mean_predictor(const PreparedData& data) {
  auto table = std::make_shared<impute::ImputationModel>(
      impute::ImputationModel::fit(impute::Method::Mean, data.truth, data.split.train));
  return [table](std::span<const data::WindowSample> samples) {
    const std::size_t p = samples[0].s.dim(0);
    const std::size_t h = samples[0].target.dim(1);
    const std::size_t B = samples.size();
    Tensor out({p * h, B});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < p; ++s)
        for (std::size_t k = 0; k < h; ++k)
          out[(s * h + k) * B + b] = table->table_value(s, (samples[b].t + k) % kPointsPerDay);
    return out;
  };
}

}  // namespace hybridflow::eval
