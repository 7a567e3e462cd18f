#include "hybridflow/synthgen.hpp"

#include <cmath>
#include <random>
#include <string>

#include "hybridflow/errors.hpp"

namespace hybridflow::synth {

using data::kPointsPerDay;

std::vector<double> default_profile() {
  auto bump = [](double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> out(kPointsPerDay);
  for (std::size_t i = 0; i < kPointsPerDay; ++i) {
    const double hour = static_cast<double>(i) * 5.0 / 60.0;
    const double daytime = logistic(1.5 * (hour - 6.0)) * logistic(-1.2 * (hour - 21.5));
    out[i] = 30.0 + 150.0 * daytime + 260.0 * bump(hour, 8.0, 1.0) + 240.0 * bump(hour, 17.5, 1.4);
  }
  return out;
}

void SynthConfig::validate() const {
  if (p == 0) throw UsageError("synth: p must be positive");
  if (days == 0) throw UsageError("synth: days must be positive");
  if (profile.size() != kPointsPerDay)
    throw UsageError("synth: profile must have 288 points, got " + std::to_string(profile.size()));
  for (double v : profile)
    if (!(v > 0.0)) throw UsageError("synth: profile values must be positive");
  if (!(weekend_scale > 0.0)) throw UsageError("synth: weekend_scale must be positive");
  if (!(noise_std >= 0.0)) throw UsageError("synth: noise_std must be non-negative");
  if (!(disturbance_share >= 0.0 && disturbance_share <= 1.0))
    throw UsageError("synth: disturbance_share must lie in [0, 1]");
  if (!(disturbance_ar >= 0.0 && disturbance_ar < 1.0))
    throw UsageError("synth: disturbance_ar must lie in [0, 1)");
  if (!(native_missing_ratio >= 0.0 && native_missing_ratio < 1.0))
    throw UsageError("synth: native_missing_ratio must lie in [0, 1)");
}

data::FlowDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t T = cfg.days * kPointsPerDay;
  std::vector<data::StationInfo> stations;
  for (std::size_t s = 0; s < cfg.p; ++s)
    stations.push_back({std::to_string(1'210'000 + 10 * s), "ML"});
  data::FlowDataset ds(std::move(stations), cfg.start_date, T);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Disturbance indexed by (t - s*lag) + offset so every station can read it.
  const std::size_t offset = (cfg.p - 1) * cfg.propagation_lag;
  std::vector<double> disturbance(T + offset);
  const double innovation = std::sqrt(1.0 - cfg.disturbance_ar * cfg.disturbance_ar);
  double state = normal(rng);
  for (double& d : disturbance) {
    d = state;
    state = cfg.disturbance_ar * state + innovation * normal(rng);
  }

  const double shared = std::sqrt(cfg.disturbance_share);
  const double local = std::sqrt(1.0 - cfg.disturbance_share);
  const auto ppd = static_cast<std::ptrdiff_t>(kPointsPerDay);
  for (std::size_t s = 0; s < cfg.p; ++s) {
    const auto shift = static_cast<std::ptrdiff_t>(s * cfg.propagation_lag);
    for (std::size_t t = 0; t < T; ++t) {
      const std::ptrdiff_t source = static_cast<std::ptrdiff_t>(t) - shift;
      const std::ptrdiff_t day = source >= 0 ? source / ppd : (source - ppd + 1) / ppd;
      const auto tod = static_cast<std::size_t>(source - day * ppd);
      const std::chrono::weekday wd{cfg.start_date + std::chrono::days{day}};
      const double scale = wd.iso_encoding() >= 6 ? cfg.weekend_scale : 1.0;
      const double e = shared * disturbance[static_cast<std::size_t>(source) + offset] +
                       local * normal(rng);
      const double flow = scale * cfg.profile[tod] * (1.0 + cfg.noise_std * e);
      ds.value(s, t) = flow > 0.0 ? flow : 0.0;
    }
  }

  if (cfg.native_missing_ratio > 0.0) {
    std::bernoulli_distribution drop(cfg.native_missing_ratio);
    for (std::size_t s = 0; s < cfg.p; ++s)
      for (std::size_t t = 0; t < T; ++t)
        if (drop(rng)) ds.set_missing(s, t);
  }
  return ds;
}

}  // namespace hybridflow::synth
