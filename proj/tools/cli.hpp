#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybridflow/dataset.hpp"
#include "hybridflow/imputation.hpp"
#include "hybridflow/synthgen.hpp"
#include "hybridflow/training.hpp"

namespace hybridflow::cli {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

/// Effective settings of one invocation: config file first, flags on top.
struct ExperimentConfig {
  std::optional<std::filesystem::path> data_path;
  synth::SynthConfig synth;
  bool has_synth = false;
  std::vector<std::string> archs{"LSTM2-SP-CNN3"};
  std::vector<impute::Method> methods{impute::Method::Mean};
  data::WindowConfig window;
  train::TrainConfig train;
  std::vector<double> ratios;
  std::vector<std::uint64_t> sweep_seeds;
  impute::Scope scope = impute::Scope::TestOnly;
  std::optional<std::filesystem::path> checkpoint;
  std::string views = "overall";
  std::filesystem::path out = "out";

  /// Canonical JSON of everything that influences results (not the output dir).
  std::string canonical_json() const;
  /// FNV-1a 64 of canonical_json(), hex.
  std::string hash() const;
};

/// Parses a JSON config file with "schema_version": 1.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Entry point shared by the binary and the tests; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hybridflow::cli
