#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridflow/dataset.hpp"
#include "hybridflow/layers.hpp"

namespace hybridflow::hybrid {

/// How LSTM and CNN blocks are wired inside one input stream.
enum class TopologyKind {
  LstmOnly,
  SeriesLstmCnn,    ///< LSTM, then CNN on its output
  SeriesCnnLstm,    ///< CNN, then LSTM on its output
  Parallel,         ///< both on the input; outputs stacked
  SeriesParallelD,  ///< LSTM on input, CNN on LSTM output; LSTM and CNN outputs stacked
  SeriesParallelE,  ///< CNN on input, LSTM on CNN output; CNN and LSTM outputs stacked
};

struct Topology {
  TopologyKind kind = TopologyKind::LstmOnly;
  std::size_t lstm_depth = 1;
  std::size_t cnn_depth = 0;

  /// Rows of a stream's output block, in units of p.
  std::size_t row_multiplier() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

inline constexpr std::array<std::string_view, 12> kArchitectures = {
    "LSTM1",         "LSTM2",         "LSTM1-S-CNN1",  "LSTM2-S-CNN3",
    "CNN1-S-LSTM1",  "CNN3-S-LSTM2",  "LSTM1-P-CNN1",  "LSTM2-P-CNN3",
    "LSTM1-SP-CNN1", "LSTM2-SP-CNN3", "CNN1-SP-LSTM1", "CNN3-SP-LSTM2",
};

/// Throws UsageError listing the valid names.
Topology parse_architecture(std::string_view name);
std::string architecture_name(const Topology& topology);
/// Throws UsageError for combinations outside the named architectures.
void validate(const Topology& topology);

/// Number of input streams: near-term, previous day, previous week.
inline constexpr std::size_t kStreams = 3;

struct ModelSpec {
  std::string arch;
  Topology topology;
  std::size_t p = 0;  ///< stations
  std::size_t n = 0;  ///< steps per input block
  std::size_t h = 0;  ///< horizon
  bool share_weights = false;
  std::size_t conv_channels = 1;

  static ModelSpec make(std::string_view arch, std::size_t p, std::size_t n, std::size_t h);

  std::size_t stream_rows() const { return topology.row_multiplier() * p; }
  std::size_t head_inputs() const { return kStreams * stream_rows() * n; }
  std::size_t head_outputs() const { return p * h; }
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Time-major inputs for a batch of windows; see layers.hpp.
struct Batch {
  std::array<Tensor, kStreams> streams;  ///< each [p x n*size]
  std::size_t size = 0;
};

Batch make_batch(std::span<const data::WindowSample> samples);

/// Targets as head-shaped columns [p*h x size]; row s*h + k is station s,
/// horizon step k. Mask uses the same layout.
struct TargetBlock {
  Tensor values;
  std::vector<std::uint8_t> mask;
};
TargetBlock make_targets(std::span<const data::WindowSample> samples);

struct StreamParams {
  std::vector<layers::LstmParams> lstm;
  std::optional<layers::ConvStackParams> conv;
};

class Model {
 public:
  Model() = default;

  /// Deterministic Glorot initialization for a given seed.
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }

  /// Predictions [p*h x batch].
  ad::Var forward(ad::Graph& graph, const Batch& batch, layers::Mode mode);
  ad::Var stream_features(const layers::Binder& bind, std::size_t stream, ad::Var input);
  Tensor predict(const Batch& batch);
  /// Single window, reshaped to [p x h].
  Tensor predict(const data::WindowSample& sample);

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  StreamParams& stream(std::size_t i) { return streams_[spec_.share_weights ? 0 : i]; }
  layers::DenseParams& head() { return head_; }

 private:
  ModelSpec spec_;
  std::vector<StreamParams> streams_;
  layers::DenseParams head_;
};

}  // namespace hybridflow::hybrid
