#pragma once

// Neural building blocks. Sequences use a time-major batch layout:
// a tensor [features x steps*batch] whose column t*batch + b is step t of
// sample b. With batch = 1 this is the plain [features x steps] array.

#include <array>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hybridflow/autodiff.hpp"

namespace hybridflow::layers {

/// Whether bound parameters receive gradients.
enum class Mode { Train, Infer };

/// Binds parameters into a graph, as trainable leaves or as constants.
class Binder {
 public:
  Binder(ad::Graph& graph, Mode mode) : graph_(graph), mode_(mode) {}
  ad::Var operator()(ad::Parameter& p) const;
  ad::Graph& graph() const noexcept { return graph_; }

 private:
  ad::Graph& graph_;
  Mode mode_;
};

/// Glorot-uniform initializer, limit sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng);

enum Gate : std::size_t { kForget = 0, kInput = 1, kCell = 2, kOutput = 3 };

struct LstmParams {
  std::array<ad::Parameter, 4> input_weights;      // [hidden x input], indexed by Gate
  std::array<ad::Parameter, 4> recurrent_weights;  // [hidden x hidden]
  std::array<ad::Parameter, 4> biases;             // [hidden]

  std::size_t input_size() const { return input_weights[0].value.dim(1); }
  std::size_t hidden_size() const { return input_weights[0].value.dim(0); }

  static LstmParams zeros(const std::string& prefix, std::size_t input, std::size_t hidden);
  /// Glorot weights, zero biases except the forget-gate bias, which is 1.
  static LstmParams glorot(const std::string& prefix, std::size_t input, std::size_t hidden,
                           std::mt19937_64& rng);

  std::vector<ad::Parameter*> parameters();
};

struct LstmState {
  Tensor h;  // [hidden x batch]
  Tensor c;
};

struct LstmVars {
  ad::Var h;
  ad::Var c;
};

/// One LSTM update: x [input x batch], prev h/c [hidden x batch].
LstmVars lstm_step(const Binder& bind, LstmParams& params, ad::Var x, LstmVars prev);
LstmState lstm_step(const LstmParams& params, const Tensor& x, const LstmState& prev);

/// Runs the LSTM over `steps` time-major columns from a zero state; output
/// column block t holds h_t.
ad::Var lstm_layer(const Binder& bind, LstmParams& params, ad::Var seq, std::size_t steps);
/// seq [input x n], single sample.
Tensor lstm_layer(const LstmParams& params, const Tensor& seq);

struct ConvStackSpec {
  std::vector<std::size_t> kernel_sizes;
  /// Channels between layers; the last layer always maps back to one channel.
  std::size_t channels = 1;

  static ConvStackSpec of_depth(std::size_t depth);
  std::size_t max_kernel() const;
};

struct ConvLayerParams {
  ad::Parameter kernels;  // [c_out x c_in x k]
  ad::Parameter bias;     // [c_out]
};

struct ConvStackParams {
  ConvStackSpec spec;
  std::vector<ConvLayerParams> layers;

  static ConvStackParams glorot(const std::string& prefix, const ConvStackSpec& spec,
                                std::mt19937_64& rng);
  std::vector<ad::Parameter*> parameters();
};

/// Station-axis convolution stack: every column of seq [positions x m] is an
/// independent single-channel signal; each layer is conv1d_same then ReLU.
ad::Var conv_stack(const Binder& bind, ConvStackParams& params, ad::Var seq);
Tensor conv_stack(const ConvStackParams& params, const Tensor& seq);

struct DenseParams {
  ad::Parameter weights;  // [out x in]
  ad::Parameter bias;     // [out]

  static DenseParams glorot(const std::string& prefix, std::size_t in, std::size_t out,
                            std::mt19937_64& rng);
  std::vector<ad::Parameter*> parameters();
};

/// Affine map on column vectors: x [in x batch] -> [out x batch].
ad::Var dense(const Binder& bind, DenseParams& params, ad::Var x);

}  // namespace hybridflow::layers
