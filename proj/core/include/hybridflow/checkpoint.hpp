#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hybridflow/dataset.hpp"
#include "hybridflow/hybrid.hpp"
#include "hybridflow/imputation.hpp"

namespace hybridflow::io {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to reuse a trained model on new data.
struct Checkpoint {
  std::string id;
  hybrid::Model model;
  data::WindowConfig window;
  data::Standardization stats;
  impute::Method method = impute::Method::Mean;
  std::uint64_t seed = 0;
};

/// JSON document: format tag, version, model spec, window, standardization,
/// a manifest of (name, shape) per tensor and the row-major tensor data.
std::string to_json(const Checkpoint& checkpoint);
Checkpoint from_json(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws DataError on a malformed file; when the manifest disagrees with
/// the architecture it names, the message lists every differing entry.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hybridflow::io
