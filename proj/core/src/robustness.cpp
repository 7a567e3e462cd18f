#include "hybridflow/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "hybridflow/errors.hpp"
#include "hybridflow/evaluation.hpp"
#include "hybridflow/pipeline.hpp"

namespace hybridflow::eval {

std::vector<double> default_ratio_grid() {
  std::vector<double> out;
  for (int i = 0; i <= 10; ++i) out.push_back(0.03 * i);
  return out;
}

namespace {

void check_grid(std::span<const double> ratios, std::span<const std::uint64_t> seeds) {
  if (ratios.empty() || seeds.empty()) throw UsageError("sweep: empty ratio grid or seed list");
  if (!std::is_sorted(ratios.begin(), ratios.end()))
    throw UsageError("sweep: ratios must be sorted ascending");
}

SweepPoint summarize(double ratio, impute::Method method, const std::vector<double>& maes,
                     const std::vector<double>& rmses, std::size_t cells) {
  SweepPoint point;
  point.ratio = ratio;
  point.method = method;
  point.mae = train::mean_sd(maes);
  point.rmse = train::mean_sd(rmses);
  point.evaluated_cells = cells;
  point.seeds = maes.size();
  return point;
}

}  // namespace

std::vector<SweepPoint> sweep_complete_train(hybrid::Model& model,
                                             const data::Standardization& stats,
                                             const data::FlowDataset& pristine,
                                             const data::WindowConfig& window,
                                             impute::Method method,
                                             std::span<const double> ratios,
                                             std::span<const std::uint64_t> seeds) {
  check_grid(ratios, seeds);
  const data::FlowDataset clean = data::clean(pristine);
  const data::DaySplit split = data::split(clean);
  std::vector<SweepPoint> curve;
  for (double ratio : ratios) {
    std::vector<double> maes, rmses;
    std::size_t cells = 0;
    for (std::uint64_t seed : seeds) {
      const auto injected =
          impute::inject_missing(clean, ratio, seed, impute::Scope::TestOnly, split.test);
      const PreparedData prepared = prepare(injected.data, clean, method, window, stats);
      const EvalReport report = evaluate(model, prepared, prepared.test_days());
      maes.push_back(report.overall.mae());
      rmses.push_back(report.overall.rmse());
      cells = report.overall.count;
    }
    curve.push_back(summarize(ratio, method, maes, rmses, cells));
  }
  return curve;
}

std::vector<SweepPoint> sweep_incomplete_train(std::string_view arch,
                                               const data::FlowDataset& pristine,
                                               const data::WindowConfig& window,
                                               impute::Method method,
                                               std::span<const double> ratios,
                                               std::span<const std::uint64_t> seeds,
                                               const train::TrainConfig& cfg) {
  check_grid(ratios, seeds);
  const data::FlowDataset clean = data::clean(pristine);
  const hybrid::ModelSpec spec =
      hybrid::ModelSpec::make(arch, clean.stations_count(), window.n, window.h);
  std::vector<SweepPoint> curve;
  for (double ratio : ratios) {
    std::vector<double> maes, rmses;
    std::size_t cells = 0;
    for (std::uint64_t seed : seeds) {
      const auto injected = impute::inject_missing(clean, ratio, seed, impute::Scope::AllData,
                                                   {0, clean.days()});
      const PreparedData prepared = prepare(injected.data, clean, method, window);
      hybrid::Model model = hybrid::Model::build(spec, seed);
      train::train(model, prepared, cfg);
      const EvalReport report = evaluate(model, prepared, prepared.test_days());
      maes.push_back(report.overall.mae());
      rmses.push_back(report.overall.rmse());
      cells = report.overall.count;
    }
    curve.push_back(summarize(ratio, method, maes, rmses, cells));
  }
  return curve;
}

double degradation(std::span<const SweepPoint> curve, double ratio) {
  auto find = [&](double r) -> const SweepPoint& {
    for (const auto& point : curve)
      if (std::abs(point.ratio - r) < 1e-9) return point;
    throw UsageError("degradation: sweep has no point at ratio " + std::to_string(r));
  };
  return find(ratio).mae.mean / find(0.0).mae.mean;
}

}  // namespace hybridflow::eval
