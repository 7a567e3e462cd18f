#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hybridflow/tensor.hpp"

namespace hybridflow::data {

/// 5-minute sampling: 24 * 60 / 5.
inline constexpr std::size_t kPointsPerDay = 288;

struct StationInfo {
  std::string id;    ///< VDS identifier
  std::string lane;  ///< "ML" or "OR"

  friend bool operator==(const StationInfo&, const StationInfo&) = default;
};

/// Per-station flow series, stations ordered upstream to downstream.
/// Missing cells hold 0.0 with mask = 0.
struct FlowDataset {
  std::vector<StationInfo> stations;
  std::chrono::sys_days start_date{};
  Tensor flows;                    ///< [stations x timestamps]
  std::vector<std::uint8_t> mask;  ///< 1 = observed, row-major like flows

  FlowDataset() = default;
  FlowDataset(std::vector<StationInfo> stations, std::chrono::sys_days start,
              std::size_t timestamps);

  std::size_t stations_count() const { return stations.size(); }
  std::size_t timestamps() const { return flows.rank() == 2 ? flows.dim(1) : 0; }
  std::size_t days() const { return timestamps() / kPointsPerDay; }

  double value(std::size_t s, std::size_t t) const { return flows.at(s, t); }
  double& value(std::size_t s, std::size_t t) { return flows.at(s, t); }
  bool observed(std::size_t s, std::size_t t) const { return mask[s * timestamps() + t] != 0; }
  void set_missing(std::size_t s, std::size_t t);
  void set_observed(std::size_t s, std::size_t t, double v);
  std::size_t observed_count() const;

  /// 0 = Monday ... 6 = Sunday.
  unsigned weekday(std::size_t day) const;

  friend bool operator==(const FlowDataset&, const FlowDataset&) = default;
};

/// Half-open range of day indices.
struct DayRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t day) const { return day >= begin && day < end; }
  friend bool operator==(const DayRange&, const DayRange&) = default;
};

struct DaySplit {
  DayRange train;
  DayRange val;
  DayRange test;
};

struct WindowConfig {
  std::size_t n = 21;    ///< near-term steps
  std::size_t h = 9;     ///< horizon
  std::size_t n_d = 6;   ///< daily lag half-width
  std::size_t n_w = 6;   ///< weekly lag half-width

  /// Smallest and largest within-day prediction position.
  std::size_t first_position() const;
  std::size_t last_position() const;
  std::size_t samples_per_day() const;
  /// Throws unless every block fits inside one day.
  void validate() const;
  /// Additionally requires the three input blocks to share width n.
  void validate_for_model() const;

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

/// Input blocks and target for one prediction time t. Masks are row-major
/// over the matching block.
struct WindowSample {
  Tensor s;       ///< [p x n], timestamps [t-n, t-1]
  Tensor s_d;     ///< [p x (2n_d+h)], starting at t - 288 - n_d
  Tensor s_w;     ///< [p x (2n_w+h)], starting at t - 7*288 - n_w
  Tensor target;  ///< [p x h], timestamps [t, t+h-1]
  std::vector<std::uint8_t> s_mask, s_d_mask, s_w_mask, target_mask;
  std::size_t t = 0;
};

// CSV I/O. Header: "timestamp,<station id>...". Rows hold ISO-8601
// timestamps at 5-minute spacing starting at midnight; empty or NaN = missing.

/// Default sidecar location: flows.csv -> flows.stations.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Reads the CSV. When a sidecar is given (or exists at the default
/// location) its station order is used and every column must appear in it.
FlowDataset load_csv(const std::filesystem::path& path,
                     std::optional<std::filesystem::path> sidecar = std::nullopt);
void save_csv(const FlowDataset& ds, const std::filesystem::path& path, bool write_sidecar = true);

std::string format_timestamp(std::chrono::sys_days start, std::size_t index);

/// Observed negative values become missing.
FlowDataset clean(const FlowDataset& ds);

/// Per-station affine transform x -> (x - mean) / std.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;  ///< sample standard deviation (N-1)

  /// Transforms every cell; missing cells stay 0 and masked.
  FlowDataset apply(const FlowDataset& ds) const;
  double invert(std::size_t station, double z) const { return z * std[station] + mean[station]; }

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

/// Statistics over observed cells of the training days only. Throws
/// NumericError when a station has fewer than two observations or no variance.
Standardization fit_standardization(const FlowDataset& ds, DayRange train);

struct Standardized {
  FlowDataset data;
  Standardization stats;
};
Standardized standardize(const FlowDataset& ds, DayRange train);

/// Chronological whole-day split: floor(10%) validation, floor(10%) test,
/// the rest (including remainders) training.
DaySplit split(const FlowDataset& ds);
DaySplit split_days(std::size_t days);

/// Earliest day that has a full week of history.
inline constexpr std::size_t kFirstEligibleDay = 7;

/// Windows whose prediction time falls in `days`, chronological.
std::vector<WindowSample> extract_windows(const FlowDataset& ds, const WindowConfig& cfg,
                                          DayRange days);

/// Copies the given days into a standalone dataset.
FlowDataset subset(const FlowDataset& ds, DayRange days);

}  // namespace hybridflow::data
