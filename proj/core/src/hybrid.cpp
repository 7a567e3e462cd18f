#include "hybridflow/hybrid.hpp"

#include <algorithm>
#include <random>

#include "hybridflow/errors.hpp"

namespace hybridflow::hybrid {

namespace {

struct NamedTopology {
  std::string_view name;
  Topology topology;
};

constexpr std::array<NamedTopology, 12> kTable = {{
    {"LSTM1", {TopologyKind::LstmOnly, 1, 0}},
    {"LSTM2", {TopologyKind::LstmOnly, 2, 0}},
    {"LSTM1-S-CNN1", {TopologyKind::SeriesLstmCnn, 1, 1}},
    {"LSTM2-S-CNN3", {TopologyKind::SeriesLstmCnn, 2, 3}},
    {"CNN1-S-LSTM1", {TopologyKind::SeriesCnnLstm, 1, 1}},
    {"CNN3-S-LSTM2", {TopologyKind::SeriesCnnLstm, 2, 3}},
    {"LSTM1-P-CNN1", {TopologyKind::Parallel, 1, 1}},
    {"LSTM2-P-CNN3", {TopologyKind::Parallel, 2, 3}},
    {"LSTM1-SP-CNN1", {TopologyKind::SeriesParallelD, 1, 1}},
    {"LSTM2-SP-CNN3", {TopologyKind::SeriesParallelD, 2, 3}},
    {"CNN1-SP-LSTM1", {TopologyKind::SeriesParallelE, 1, 1}},
    {"CNN3-SP-LSTM2", {TopologyKind::SeriesParallelE, 2, 3}},
}};

std::string valid_names() {
  std::string out;
  for (auto name : kArchitectures) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

}  // namespace

std::size_t Topology::row_multiplier() const {
  switch (kind) {
    case TopologyKind::Parallel:
    case TopologyKind::SeriesParallelD:
    case TopologyKind::SeriesParallelE: return 2;
    default: return 1;
  }
}

Topology parse_architecture(std::string_view name) {
  for (const auto& entry : kTable)
    if (entry.name == name) return entry.topology;
  throw UsageError("unknown architecture '" + std::string(name) + "'; valid names: " +
                   valid_names());
}

std::string architecture_name(const Topology& topology) {
  for (const auto& entry : kTable)
    if (entry.topology == topology) return std::string(entry.name);
  throw UsageError("topology does not correspond to a named architecture");
}

void validate(const Topology& topology) { (void)architecture_name(topology); }

ModelSpec ModelSpec::make(std::string_view arch, std::size_t p, std::size_t n, std::size_t h) {
  ModelSpec spec;
  spec.arch = std::string(arch);
  spec.topology = parse_architecture(arch);
  spec.p = p;
  spec.n = n;
  spec.h = h;
  spec.validate();
  return spec;
}

void ModelSpec::validate() const {
  hybrid::validate(topology);
  if (architecture_name(topology) != arch)
    throw UsageError("model spec name '" + arch + "' does not match its topology");
  if (p == 0 || n == 0 || h == 0) throw UsageError("model spec: p, n and h must be positive");
  if (topology.cnn_depth > 0) {
    const auto conv = layers::ConvStackSpec::of_depth(topology.cnn_depth);
    if (p < conv.max_kernel())
      throw UsageError("model spec: p=" + std::to_string(p) + " is smaller than kernel width " +
                       std::to_string(conv.max_kernel()));
  }
  if (conv_channels == 0) throw UsageError("model spec: conv_channels must be positive");
}

Batch make_batch(std::span<const data::WindowSample> samples) {
  if (samples.empty()) throw UsageError("make_batch: no samples");
  const std::size_t p = samples[0].s.dim(0);
  const std::size_t B = samples.size();
  Batch batch;
  batch.size = B;
  for (std::size_t k = 0; k < kStreams; ++k) {
    auto block = [k](const data::WindowSample& w) -> const Tensor& {
      return k == 0 ? w.s : (k == 1 ? w.s_d : w.s_w);
    };
    const std::size_t n = block(samples[0]).dim(1);
    Tensor out({p, n * B});
    for (std::size_t b = 0; b < B; ++b) {
      const Tensor& src = block(samples[b]);
      if (src.shape() != Shape{p, n})
        throw DimensionError("make_batch: sample blocks differ in shape");
      for (std::size_t s = 0; s < p; ++s)
        for (std::size_t t = 0; t < n; ++t) out[s * n * B + t * B + b] = src[s * n + t];
    }
    batch.streams[k] = std::move(out);
  }
  return batch;
}

TargetBlock make_targets(std::span<const data::WindowSample> samples) {
  if (samples.empty()) throw UsageError("make_targets: no samples");
  const std::size_t rows = samples[0].target.size();
  const std::size_t B = samples.size();
  TargetBlock out{Tensor({rows, B}), std::vector<std::uint8_t>(rows * B, 0)};
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t r = 0; r < rows; ++r) {
      out.values[r * B + b] = samples[b].target[r];
      out.mask[r * B + b] = samples[b].target_mask[r];
    }
  return out;
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model model;
  model.spec_ = spec;
  std::mt19937_64 rng(seed);
  const std::size_t count = spec.share_weights ? 1 : kStreams;
  layers::ConvStackSpec conv_spec;
  if (spec.topology.cnn_depth > 0) {
    conv_spec = layers::ConvStackSpec::of_depth(spec.topology.cnn_depth);
    conv_spec.channels = spec.conv_channels;
  }
  for (std::size_t k = 0; k < count; ++k) {
    const std::string prefix = spec.share_weights ? "shared" : "stream" + std::to_string(k);
    StreamParams stream;
    for (std::size_t l = 0; l < spec.topology.lstm_depth; ++l)
      stream.lstm.push_back(
          layers::LstmParams::glorot(prefix + ".lstm" + std::to_string(l), spec.p, spec.p, rng));
    if (spec.topology.cnn_depth > 0)
      stream.conv = layers::ConvStackParams::glorot(prefix, conv_spec, rng);
    model.streams_.push_back(std::move(stream));
  }
  model.head_ = layers::DenseParams::glorot("head", spec.head_inputs(), spec.head_outputs(), rng);
  return model;
}

ad::Var Model::stream_features(const layers::Binder& bind, std::size_t k, ad::Var x) {
  StreamParams& params = stream(k);
  const std::size_t steps = spec_.n;
  auto run_lstm = [&](ad::Var in) {
    for (auto& layer : params.lstm) in = layers::lstm_layer(bind, layer, in, steps);
    return in;
  };
  auto run_cnn = [&](ad::Var in) { return layers::conv_stack(bind, *params.conv, in); };
  auto stack = [](ad::Var a, ad::Var b) {
    const std::array<ad::Var, 2> parts{a, b};
    return ad::concat(parts, 0);
  };

  switch (spec_.topology.kind) {
    case TopologyKind::LstmOnly: return run_lstm(x);
    case TopologyKind::SeriesLstmCnn: return run_cnn(run_lstm(x));
    case TopologyKind::SeriesCnnLstm: return run_lstm(run_cnn(x));
    case TopologyKind::Parallel: return stack(run_lstm(x), run_cnn(x));
    case TopologyKind::SeriesParallelD: {
      ad::Var l = run_lstm(x);
      return stack(l, run_cnn(l));
    }
    case TopologyKind::SeriesParallelE: {
      ad::Var c = run_cnn(x);
      return stack(c, run_lstm(c));
    }
  }
  throw UsageError("unknown topology");
}

ad::Var Model::forward(ad::Graph& graph, const Batch& batch, layers::Mode mode) {
  const layers::Binder bind(graph, mode);
  std::array<ad::Var, kStreams> features;
  for (std::size_t k = 0; k < kStreams; ++k) {
    const Tensor& in = batch.streams[k];
    if (in.shape() != Shape{spec_.p, spec_.n * batch.size})
      throw DimensionError("forward: stream " + std::to_string(k) + " has shape " +
                           shape_string(in.shape()) + ", expected " +
                           shape_string({spec_.p, spec_.n * batch.size}));
    ad::Var out = stream_features(bind, k, graph.constant(in));
    features[k] = ad::flatten_time_major(out, spec_.n);
  }
  return layers::dense(bind, head_, ad::concat(features, 0));
}

Tensor Model::predict(const Batch& batch) {
  ad::Graph graph;
  return forward(graph, batch, layers::Mode::Infer).value();
}

Tensor Model::predict(const data::WindowSample& sample) {
  const Batch batch = make_batch(std::span<const data::WindowSample>(&sample, 1));
  return predict(batch).reshaped({spec_.p, spec_.h});
}

std::vector<ad::Parameter*> Model::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& stream : streams_) {
    for (auto& layer : stream.lstm)
      for (auto* p : layer.parameters()) out.push_back(p);
    if (stream.conv)
      for (auto* p : stream.conv->parameters()) out.push_back(p);
  }
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> Model::parameters() const {
  auto params = const_cast<Model*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->value.size();
  return total;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

}  // namespace hybridflow::hybrid
