#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hybridflow/errors.hpp"
#include "hybridflow/evaluation.hpp"
#include "hybridflow/robustness.hpp"
#include "support.hpp"

using namespace hybridflow;
using hybridflow::testing::make_dataset;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const data::WindowConfig kSmallWindow{6, 2, 2, 2};
// Prediction positions for kSmallWindow: t - 6 >= day start, t + 2 + 2 <= day end.
constexpr std::size_t kFirst = 6, kLast = 284;

data::FlowDataset wavy(std::size_t p, std::size_t days, std::uint64_t seed, double missing = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 3.0);
  std::bernoulli_distribution gap(missing);
  return make_dataset(p, days, [&](std::size_t s, std::size_t t) {
    const double v = 50.0 + 20.0 * std::sin(static_cast<double>(t % 288) / 30.0 + s) + noise(rng);
    return gap(rng) ? kNaN : v;
  });
}

std::size_t csv_rows(const eval::EvalReport& r) {
  std::ostringstream out;
  r.write_csv(out);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  return lines - 1;
}

eval::Predictor perfect() {
  return [](std::span<const data::WindowSample> samples) {
    const std::size_t p = samples[0].target.dim(0), h = samples[0].target.dim(1), B = samples.size();
    Tensor out({p * h, B});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t r = 0; r < p * h; ++r) out[r * B + b] = samples[b].target[r];
    return out;
  };
}

}  // namespace

TEST_CASE("mae and rmse hand examples") {
  const std::vector<double> zero{0, 0};
  CHECK(eval::mae(std::vector<double>{1, -1}, zero) == 1.0);
  CHECK(std::abs(eval::rmse(std::vector<double>{3, 4}, zero) - std::sqrt(12.5)) <= 1e-12);
  CHECK(eval::mae(std::vector<double>{3, 4}, zero) == 3.5);
  const std::vector<double> y{0.5, -2.0, 7.0};
  CHECK(eval::mae(y, y) == 0.0);
  CHECK(eval::rmse(y, y) == 0.0);
  CHECK_THROWS_AS(eval::mae(std::vector<double>{}, std::vector<double>{}), UsageError);
  CHECK_THROWS_AS(eval::rmse(std::vector<double>{1.0}, zero), DimensionError);
}

TEST_CASE("mae <= rmse and permutation invariance on random vectors") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> value(0.0, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = value(rng);
      b[i] = value(rng);
    }
    const double m = eval::mae(a, b), r = eval::rmse(a, b);
    CHECK(m <= r * (1.0 + 1e-15));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> pa(n), pb(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a[idx[i]];
      pb[i] = b[idx[i]];
    }
    CHECK(eval::mae(pa, pb) == doctest::Approx(m).epsilon(1e-13));
  }
}

TEST_CASE("empty buckets are undefined, not zero") {
  eval::Bucket b;
  CHECK_FALSE(b.defined());
  CHECK(std::isnan(b.mae()));
  CHECK(std::isnan(b.rmse()));
  b.add(-2.0);
  CHECK(b.mae() == 2.0);
  CHECK(b.rmse() == 2.0);
}

TEST_CASE("parse_views") {
  CHECK(eval::parse_views("") == eval::kOverall);
  CHECK(eval::parse_views("station") == eval::kStation);
  CHECK(eval::parse_views("overall,horizon") == (eval::kOverall | eval::kHorizon));
  CHECK(eval::parse_views("all") == eval::kAllViews);
  CHECK(eval::parse_views("tod,dow") == (eval::kTimeOfDay | eval::kDayOfWeek));
  CHECK_THROWS_AS(eval::parse_views("week"), UsageError);
}

TEST_CASE("a perfect predictor scores zero in every view") {
  const auto data = prepare(wavy(3, 20, 2), impute::Method::Mean, kSmallWindow);
  const auto r = eval::evaluate(perfect(), data, data.test_days(), eval::kAllViews);
  CHECK(r.overall.count == 2 * 279 * 3 * 2);
  CHECK(r.overall.mae() == 0.0);
  for (const auto* view : {&r.horizon, &r.station})
    for (const auto& b : *view) CHECK(b.mae() == 0.0);
  CHECK(r.horizon.size() == 2);
  CHECK(r.station.size() == 3);
  CHECK(r.time_of_day.size() == 288);
  CHECK(r.day_of_week.size() == 7);
}

TEST_CASE("persistence errors match a direct loop over the data") {
  const auto raw = wavy(4, 20, 3, 0.1);
  const auto data = prepare(raw, impute::Method::Median, kSmallWindow);
  const auto days = data.test_days();
  const auto r = eval::evaluate(eval::persistence_predictor(), data, days, eval::kAllViews);

  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t d = days.begin; d < days.end; ++d)
    for (std::size_t pos = kFirst; pos <= kLast; ++pos) {
      const std::size_t t = d * 288 + pos;
      for (std::size_t s = 0; s < 4; ++s) {
        const double last = data.inputs.value(s, t - 1);
        for (std::size_t k = 0; k < 2; ++k) {
          if (!data.truth.observed(s, t + k)) continue;
          const double e = last - data.truth.value(s, t + k);
          abs_sum += std::abs(e);
          sq_sum += e * e;
          ++count;
        }
      }
    }
  CHECK(r.overall.count == count);
  CHECK(r.overall.mae() == doctest::Approx(abs_sum / count).epsilon(1e-12));
  CHECK(r.overall.rmse() == doctest::Approx(std::sqrt(sq_sum / count)).epsilon(1e-12));
  CHECK(r.overall.mae() <= r.overall.rmse());

  // Every view partitions the same cells.
  for (const auto* view : {&r.horizon, &r.station, &r.time_of_day, &r.day_of_week}) {
    std::size_t n = 0;
    double a = 0.0, q = 0.0;
    for (const auto& b : *view) {
      n += b.count;
      a += b.abs_sum;
      q += b.sq_sum;
    }
    CHECK(n == r.overall.count);
    CHECK(a == doctest::Approx(r.overall.abs_sum).epsilon(1e-12));
    CHECK(q == doctest::Approx(r.overall.sq_sum).epsilon(1e-12));
  }
}

TEST_CASE("day-of-week buckets are Monday first") {
  // 14 days from a Monday: test days 12 and 13 fall on Saturday and Sunday.
  const auto data = prepare(wavy(2, 14, 4), impute::Method::Mean, kSmallWindow);
  REQUIRE(data.test_days().begin == 13);
  const auto r = eval::evaluate(eval::persistence_predictor(), data, data.test_days(), eval::kDayOfWeek);
  for (std::size_t d = 0; d < 7; ++d) CHECK(r.day_of_week[d].defined() == (d == 6));
}

TEST_CASE("a station with no observed targets is flagged undefined") {
  auto raw = wavy(3, 20, 5);
  for (std::size_t t = 18 * 288; t < raw.timestamps(); ++t) raw.set_missing(1, t);
  const auto data = prepare(raw, impute::Method::Mean, kSmallWindow);
  const auto r = eval::evaluate(eval::persistence_predictor(), data, data.test_days(),
                                eval::kStation | eval::kOverall);
  CHECK_FALSE(r.station[1].defined());
  CHECK(r.station[0].defined());
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["station"][1]["mae"].is_null());
  CHECK(j["station"][1]["defined"] == false);
  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().find("station,1,0,,,0\n") != std::string::npos);
}

TEST_CASE("csv rows follow the requested views") {
  const auto data = prepare(wavy(5, 20, 6), impute::Method::Mean, kSmallWindow);
  auto rows = [&](unsigned views) {
    return csv_rows(eval::evaluate(eval::persistence_predictor(), data, data.test_days(), views));
  };
  CHECK(rows(eval::kStation) == 5);
  CHECK(rows(eval::kHorizon) == 2);
  CHECK(rows(eval::kOverall) == 1);
  CHECK(rows(eval::kAllViews) == 1 + 2 + 288 + 7 + 5);
}

TEST_CASE("evaluation is deterministic and model-driven") {
  const auto data = prepare(wavy(4, 20, 7), impute::Method::Mean, kSmallWindow);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1-P-CNN1", 4, 6, 2), 3);
  const auto a = eval::evaluate(model, data, data.val_days(), eval::kAllViews);
  const auto b = eval::evaluate(model, data, data.val_days(), eval::kAllViews);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.metadata.at("arch") == "LSTM1-P-CNN1");
  const auto c = eval::evaluate(eval::model_predictor(model), data, data.val_days());
  CHECK(c.overall.abs_sum == a.overall.abs_sum);
}

TEST_CASE("historical mean predicts the training mean per time of day") {
  // Each (station, tod) is constant over training days: the predictor is exact there.
  const auto raw = make_dataset(2, 20, [](std::size_t s, std::size_t t) {
    return 10.0 + s + static_cast<double>(t % 288) / 10.0;
  });
  const auto data = prepare(raw, impute::Method::Mean, kSmallWindow);
  const auto r = eval::evaluate(eval::historical_mean_predictor(data), data, data.test_days());
  CHECK(r.overall.mae() < 1e-12);
}

TEST_CASE("robustness sweep: ratio 0 equals evaluate and cells never grow") {
  const auto raw = wavy(4, 20, 8, 0.02);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 4, 6, 2), 2);
  const std::vector<double> ratios{0.0, 0.09, 0.21, 0.3};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto stats = prepare(raw, impute::Method::Mean, kSmallWindow).stats;
  for (auto m : {impute::Method::Mean, impute::Method::Median, impute::Method::Interpolation}) {
    CAPTURE(impute::method_name(m));
    const auto data = prepare(raw, m, kSmallWindow);
    const double plain = eval::evaluate(model, data, data.test_days()).overall.mae();
    const auto curve = eval::sweep_complete_train(model, stats, raw, kSmallWindow, m, ratios, seeds);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0].mae.mean == plain);
    CHECK(curve[0].mae.sd == 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i)
      CHECK(curve[i].evaluated_cells <= curve[i - 1].evaluated_cells);
    CHECK(eval::degradation(curve, 0.21) == doctest::Approx(curve[2].mae.mean / plain).epsilon(1e-15));
  }
}

TEST_CASE("on complete data the ratio-0 point does not depend on the method") {
  const auto raw = wavy(4, 20, 10);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 4, 6, 2), 2);
  const auto stats = prepare(raw, impute::Method::Mean, kSmallWindow).stats;
  const std::vector<double> zero{0.0};
  const std::vector<std::uint64_t> seeds{1};
  const auto mean = eval::sweep_complete_train(model, stats, raw, kSmallWindow, impute::Method::Mean, zero, seeds);
  for (auto m : {impute::Method::Median, impute::Method::Interpolation})
    CHECK(eval::sweep_complete_train(model, stats, raw, kSmallWindow, m, zero, seeds)[0].mae.mean ==
          mean[0].mae.mean);
  const auto seeds3 = std::vector<std::uint64_t>{1, 2, 3};
  CHECK_THROWS_AS(eval::sweep_complete_train(model, stats, raw, kSmallWindow, impute::Method::Mean,
                                             std::vector<double>{0.2, 0.1}, seeds3),
                  UsageError);
  CHECK(eval::default_ratio_grid().size() == 11);
  CHECK(eval::default_ratio_grid()[7] == doctest::Approx(0.21).epsilon(1e-15));
}

TEST_CASE("incomplete-train sweep trains one model per ratio and seed") {
  const auto raw = wavy(3, 20, 9);
  train::TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.runs = 1;
  const std::vector<double> ratios{0.0, 0.1};
  const std::vector<std::uint64_t> seeds{4, 5};
  const auto curve = eval::sweep_incomplete_train("LSTM1", raw, kSmallWindow, impute::Method::Mean,
                                                  ratios, seeds, cfg);
  REQUIRE(curve.size() == 2);
  CHECK(curve[1].seeds == 2);
  CHECK(std::isfinite(curve[1].mae.mean));
  CHECK(curve[0].mae.mean <= curve[0].rmse.mean);
}
