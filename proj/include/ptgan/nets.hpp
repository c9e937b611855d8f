#pragma once

// Conditional fully-connected critic D(x, t(alpha)) and generator
// G(z, t(alpha)). Both networks receive the symmetric temperature transform
// t(alpha) as one extra input column appended to their data input.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptgan/autodiff.hpp"
#include "ptgan/random.hpp"

namespace ptgan::nets {

using ad::Index;
using ad::Matrix;
using ad::Tensor;

enum class Activation { Relu, LRelu, Tanh, Sigmoid, Linear };
enum class Head { Linear, Sigmoid, Tanh, Tabular };

std::string to_string(Activation a);
std::string to_string(Head h);
Activation activation_from_string(const std::string& s);
Head head_from_string(const std::string& s);

/// Output layout of a tabular generator: continuous columns first, then one
/// Gumbel-softmax block per categorical column.
struct TabularHeadSpec {
  Index continuous_dim = 0;
  std::vector<Index> discrete_groups;
  double gumbel_temperature = 0.5;
  bool tanh_continuous = false;

  Index width() const;
};

struct MlpSpec {
  Index input_dim = 1;  ///< data columns, excluding the conditioning column
  std::vector<Index> hidden_widths;
  Index output_dim = 1;
  std::vector<Activation> activations;  ///< one per hidden layer
  double lrelu_slope = 0.1;
  Head head = Head::Linear;
  std::optional<TabularHeadSpec> tabular;

  /// `depth` hidden layers of `width` units with a shared activation.
  static MlpSpec uniform(Index input_dim, Index width, int depth, Index output_dim,
                         Activation activation, Head head = Head::Linear);

  /// Throws ConfigError when widths, activations or the head are inconsistent.
  void validate() const;
};

struct Layer {
  Matrix weight;  ///< fan_in x fan_out
  Matrix bias;    ///< 1 x fan_out
};

struct MlpParams {
  std::vector<Layer> layers;

  std::vector<double> frobenius_norms() const;
  std::size_t parameter_count() const;
};

/// Parameters as tensors, either graph leaves or plain constants.
struct BoundMlp {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  /// Weights and biases interleaved layer by layer (w0, b0, w1, b1, ...).
  std::vector<Tensor> all() const;
};

BoundMlp bind(ad::Graph& graph, const MlpParams& params);
BoundMlp constants(const MlpParams& params);

/// Glorot-uniform weights, zero biases. Deterministic per seed.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

/// Parameter matrices in BoundMlp::all() order.
std::vector<Matrix*> parameter_slots(MlpParams& params);
std::vector<const Matrix*> parameter_slots(const MlpParams& params);

/// t(alpha) = -2|alpha - 0.5| + 1, symmetric at 0.5. Throws DomainError
/// outside [0, 1].
double temp_transform(double alpha);

/// Column of t(alpha_i).
Tensor temperature_column(std::span<const double> alpha);

struct ForwardTrace {
  Tensor output;       ///< after the head
  Tensor pre_head;     ///< last affine layer output
  Tensor penultimate;  ///< input to the last affine layer
};

/// Runs the network on [x, t(alpha)].
ForwardTrace forward_trace(const MlpSpec& spec, const BoundMlp& net, const Tensor& x,
                           std::span<const double> alpha, const Matrix* gumbel = nullptr);

/// D(x, t(alpha)): one scalar per row.
Tensor critic_forward(const MlpSpec& spec, const BoundMlp& net, const Tensor& x,
                      std::span<const double> alpha);

/// G(z, t(alpha)). For a tabular head `gumbel` supplies the Gumbel noise for
/// the discrete blocks (rows x sum of group widths); without it the blocks
/// are plain tempered softmax outputs.
Tensor generator_forward(const MlpSpec& spec, const BoundMlp& net, const Tensor& z,
                         std::span<const double> alpha, const Matrix* gumbel = nullptr);

/// Standard Gumbel draws -log(-log(u)).
Matrix sample_gumbel(Index rows, Index cols, Rng& rng);

}  // namespace ptgan::nets
