#include "hybridflow/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hybridflow/errors.hpp"

namespace hybridflow::layers {

namespace {

constexpr std::array<const char*, 4> kGateSuffix = {"f", "i", "c", "o"};

struct BoundLstm {
  std::array<ad::Var, 4> w;
  std::array<ad::Var, 4> u;
  std::array<ad::Var, 4> b;
};

BoundLstm bind_lstm(const Binder& bind, LstmParams& params) {
  BoundLstm out;
  for (std::size_t g = 0; g < 4; ++g) {
    out.w[g] = bind(params.input_weights[g]);
    out.u[g] = bind(params.recurrent_weights[g]);
    out.b[g] = bind(params.biases[g]);
  }
  return out;
}

// Gate update given the input projections W_g x for this step.
LstmVars cell_update(const BoundLstm& p, const std::array<ad::Var, 4>& wx, LstmVars prev) {
  std::array<ad::Var, 4> pre;
  for (std::size_t g = 0; g < 4; ++g)
    pre[g] = ad::add_bias(ad::add(wx[g], ad::matmul(p.u[g], prev.h)), p.b[g]);
  ad::Var f = ad::sigmoid(pre[kForget]);
  ad::Var i = ad::sigmoid(pre[kInput]);
  ad::Var z = ad::tanh(pre[kCell]);
  ad::Var o = ad::sigmoid(pre[kOutput]);
  ad::Var c = ad::add(ad::mul(f, prev.c), ad::mul(i, z));
  ad::Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

void check_lstm_input(const LstmParams& params, const Shape& x) {
  if (x.size() != 2 || x[0] != params.input_size())
    throw DimensionError("lstm: input " + shape_string(x) + " does not have " +
                         std::to_string(params.input_size()) + " rows");
}

}  // namespace

ad::Var Binder::operator()(ad::Parameter& p) const {
  return mode_ == Mode::Train ? graph_.param(p) : graph_.constant(p.value);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

LstmParams LstmParams::zeros(const std::string& prefix, std::size_t input, std::size_t hidden) {
  LstmParams p;
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string s = kGateSuffix[g];
    p.input_weights[g] = ad::Parameter(prefix + ".W_" + s, Tensor({hidden, input}));
    p.recurrent_weights[g] = ad::Parameter(prefix + ".U_" + s, Tensor({hidden, hidden}));
    p.biases[g] = ad::Parameter(prefix + ".b_" + s, Tensor({hidden}));
  }
  return p;
}

LstmParams LstmParams::glorot(const std::string& prefix, std::size_t input, std::size_t hidden,
                              std::mt19937_64& rng) {
  LstmParams p = zeros(prefix, input, hidden);
  for (std::size_t g = 0; g < 4; ++g) {
    p.input_weights[g].value = glorot_uniform({hidden, input}, input, hidden, rng);
    p.recurrent_weights[g].value = glorot_uniform({hidden, hidden}, hidden, hidden, rng);
  }
  p.biases[kForget].value.fill(1.0);
  return p;
}

std::vector<ad::Parameter*> LstmParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t g = 0; g < 4; ++g) {
    out.push_back(&input_weights[g]);
    out.push_back(&recurrent_weights[g]);
    out.push_back(&biases[g]);
  }
  return out;
}

LstmVars lstm_step(const Binder& bind, LstmParams& params, ad::Var x, LstmVars prev) {
  check_lstm_input(params, x.shape());
  const BoundLstm p = bind_lstm(bind, params);
  std::array<ad::Var, 4> wx;
  for (std::size_t g = 0; g < 4; ++g) wx[g] = ad::matmul(p.w[g], x);
  return cell_update(p, wx, prev);
}

LstmState lstm_step(const LstmParams& params, const Tensor& x, const LstmState& prev) {
  ad::Graph graph;
  LstmParams local = params;
  Binder bind(graph, Mode::Infer);
  LstmVars out = lstm_step(bind, local, graph.constant(x),
                           {graph.constant(prev.h), graph.constant(prev.c)});
  return {out.h.value(), out.c.value()};
}

ad::Var lstm_layer(const Binder& bind, LstmParams& params, ad::Var seq, std::size_t steps) {
  check_lstm_input(params, seq.shape());
  if (steps == 0) throw DimensionError("lstm_layer: empty sequence");
  const std::size_t cols = seq.shape()[1];
  if (cols % steps != 0)
    throw DimensionError("lstm_layer: " + std::to_string(cols) + " columns do not split into " +
                         std::to_string(steps) + " steps");
  const std::size_t batch = cols / steps;
  const std::size_t hidden = params.hidden_size();
  ad::Graph& graph = bind.graph();
  const BoundLstm p = bind_lstm(bind, params);

  // Project every step at once, then slice per step.
  std::array<ad::Var, 4> wx_all;
  for (std::size_t g = 0; g < 4; ++g) wx_all[g] = ad::matmul(p.w[g], seq);

  LstmVars state{graph.constant(Tensor({hidden, batch})), graph.constant(Tensor({hidden, batch}))};
  std::vector<ad::Var> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::array<ad::Var, 4> wx;
    for (std::size_t g = 0; g < 4; ++g)
      wx[g] = steps == 1 ? wx_all[g] : ad::slice(wx_all[g], 1, t * batch, (t + 1) * batch);
    state = cell_update(p, wx, state);
    outputs.push_back(state.h);
  }
  return steps == 1 ? outputs.front() : ad::concat(outputs, 1);
}

Tensor lstm_layer(const LstmParams& params, const Tensor& seq) {
  if (seq.rank() != 2) throw DimensionError("lstm_layer: expected [input x n]");
  ad::Graph graph;
  LstmParams local = params;
  Binder bind(graph, Mode::Infer);
  return lstm_layer(bind, local, graph.constant(seq), seq.dim(1)).value();
}

ConvStackSpec ConvStackSpec::of_depth(std::size_t depth) {
  switch (depth) {
    case 1: return {{4}, 1};
    case 3: return {{4, 3, 2}, 1};
    default: throw UsageError("conv stack depth must be 1 or 3, got " + std::to_string(depth));
  }
}

std::size_t ConvStackSpec::max_kernel() const {
  return kernel_sizes.empty() ? 0 : *std::max_element(kernel_sizes.begin(), kernel_sizes.end());
}

ConvStackParams ConvStackParams::glorot(const std::string& prefix, const ConvStackSpec& spec,
                                        std::mt19937_64& rng) {
  if (spec.kernel_sizes.empty()) throw UsageError("conv stack needs at least one layer");
  if (spec.channels == 0) throw UsageError("conv stack channel count must be positive");
  ConvStackParams out;
  out.spec = spec;
  const std::size_t depth = spec.kernel_sizes.size();
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t k = spec.kernel_sizes[l];
    if (k == 0) throw UsageError("conv kernel size must be positive");
    const std::size_t c_in = l == 0 ? 1 : spec.channels;
    const std::size_t c_out = l + 1 == depth ? 1 : spec.channels;
    const std::string name = prefix + ".conv" + std::to_string(l);
    out.layers.push_back(
        {ad::Parameter(name + ".kernels",
                       glorot_uniform({c_out, c_in, k}, c_in * k, c_out * k, rng)),
         ad::Parameter(name + ".bias", Tensor({c_out}))});
  }
  return out;
}

std::vector<ad::Parameter*> ConvStackParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.kernels);
    out.push_back(&layer.bias);
  }
  return out;
}

ad::Var conv_stack(const Binder& bind, ConvStackParams& params, ad::Var seq) {
  const Shape s = seq.shape();
  if (s.size() != 2) throw DimensionError("conv_stack: expected [positions x m], got " +
                                          shape_string(s));
  if (s[0] < params.spec.max_kernel())
    throw UsageError("conv_stack: " + std::to_string(s[0]) +
                     " positions is fewer than kernel width " +
                     std::to_string(params.spec.max_kernel()));
  ad::Var x = ad::reshape(seq, {1, s[0], s[1]});
  for (auto& layer : params.layers)
    x = ad::relu(ad::conv1d_same(x, bind(layer.kernels), bind(layer.bias)));
  return ad::reshape(x, s);
}

Tensor conv_stack(const ConvStackParams& params, const Tensor& seq) {
  ad::Graph graph;
  ConvStackParams local = params;
  Binder bind(graph, Mode::Infer);
  return conv_stack(bind, local, graph.constant(seq)).value();
}

DenseParams DenseParams::glorot(const std::string& prefix, std::size_t in, std::size_t out,
                                std::mt19937_64& rng) {
  return {ad::Parameter(prefix + ".weights", glorot_uniform({out, in}, in, out, rng)),
          ad::Parameter(prefix + ".bias", Tensor({out}))};
}

std::vector<ad::Parameter*> DenseParams::parameters() { return {&weights, &bias}; }

ad::Var dense(const Binder& bind, DenseParams& params, ad::Var x) {
  const Shape& w = params.weights.value.shape();
  if (x.shape().size() != 2 || x.shape()[0] != w[1])
    throw DimensionError("dense: input " + shape_string(x.shape()) +
                         " incompatible with weights " + shape_string(w));
  return ad::add_bias(ad::matmul(bind(params.weights), x), bind(params.bias));
}

}  // namespace hybridflow::layers
