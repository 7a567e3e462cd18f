#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hybridflow/dataset.hpp"

namespace hybridflow::synth {

/// Double-peaked weekday profile (vehicles per 5 minutes), 288 points.
std::vector<double> default_profile();

struct SynthConfig {
  std::size_t p = 8;
  std::size_t days = 60;
  std::vector<double> profile = default_profile();
  double weekend_scale = 0.6;
  /// Timestamps by which each downstream station trails its upstream neighbour.
  std::size_t propagation_lag = 2;
  /// Relative noise level: flow = profile * (1 + noise_std * e), e ~ N(0, 1).
  double noise_std = 0.08;
  /// Fraction of noise variance carried by a disturbance that travels
  /// downstream with the same lag; the rest is independent per station.
  double disturbance_share = 0.6;
  /// AR(1) coefficient of the travelling disturbance.
  double disturbance_ar = 0.95;
  double native_missing_ratio = 0.0;
  std::uint64_t seed = 1;
  std::chrono::sys_days start_date =
      std::chrono::sys_days{std::chrono::year{2019} / std::chrono::January / 1};

  void validate() const;
};

/// Pure function of the config.
data::FlowDataset generate(const SynthConfig& cfg);

}  // namespace hybridflow::synth
