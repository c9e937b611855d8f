#include "ptgan/nets.hpp"

#include <cmath>
#include <numeric>

#include "ptgan/error.hpp"

namespace ptgan::nets {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::LRelu: return "lrelu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

std::string to_string(Head h) {
  switch (h) {
    case Head::Linear: return "linear";
    case Head::Sigmoid: return "sigmoid";
    case Head::Tanh: return "tanh";
    case Head::Tabular: return "tabular";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "lrelu") return Activation::LRelu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "linear") return Activation::Linear;
  throw ConfigError("unknown activation '" + s + "'");
}

Head head_from_string(const std::string& s) {
  if (s == "linear") return Head::Linear;
  if (s == "sigmoid") return Head::Sigmoid;
  if (s == "tanh") return Head::Tanh;
  if (s == "tabular") return Head::Tabular;
  throw ConfigError("unknown head '" + s + "'");
}

Index TabularHeadSpec::width() const {
  return continuous_dim + std::accumulate(discrete_groups.begin(), discrete_groups.end(), Index{0});
}

MlpSpec MlpSpec::uniform(Index input_dim, Index width, int depth, Index output_dim,
                         Activation activation, Head head) {
  MlpSpec s;
  s.input_dim = input_dim;
  s.hidden_widths.assign(static_cast<std::size_t>(depth), width);
  s.activations.assign(static_cast<std::size_t>(depth), activation);
  s.output_dim = output_dim;
  s.head = head;
  return s;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("network dimensions must be >= 1");
  if (activations.size() != hidden_widths.size()) {
    throw ConfigError("network needs one activation per hidden layer (" +
                      std::to_string(hidden_widths.size()) + " layers, " +
                      std::to_string(activations.size()) + " activations)");
  }
  for (Index w : hidden_widths) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
  if (!(lrelu_slope > 0.0 && lrelu_slope < 1.0)) throw ConfigError("lrelu slope must be in (0,1)");
  if (head == Head::Tabular) {
    if (!tabular) throw ConfigError("tabular head requires a TabularHeadSpec");
    if (tabular->width() != output_dim) {
      throw ConfigError("tabular head width " + std::to_string(tabular->width()) +
                        " does not match output_dim " + std::to_string(output_dim));
    }
    if (!(tabular->gumbel_temperature > 0.0)) throw ConfigError("gumbel temperature must be > 0");
    for (Index g : tabular->discrete_groups) {
      if (g < 1) throw ConfigError("categorical groups need at least one level");
    }
  }
}

std::vector<double> MlpParams::frobenius_norms() const {
  std::vector<double> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.weight.norm());
  return out;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<Tensor> BoundMlp::all() const {
  std::vector<Tensor> out;
  out.reserve(weights.size() * 2);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

BoundMlp bind(ad::Graph& graph, const MlpParams& params) {
  BoundMlp b;
  for (const auto& l : params.layers) {
    b.weights.push_back(graph.leaf(l.weight));
    b.biases.push_back(graph.leaf(l.bias));
  }
  return b;
}

BoundMlp constants(const MlpParams& params) {
  BoundMlp b;
  for (const auto& l : params.layers) {
    b.weights.emplace_back(l.weight);
    b.biases.emplace_back(l.bias);
  }
  return b;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams p;
  Index fan_in = spec.input_dim + 1;
  auto add_layer = [&](Index fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    p.layers.push_back({rng.uniform_matrix(fan_in, fan_out, -bound, bound), Matrix::Zero(1, fan_out)});
    fan_in = fan_out;
  };
  for (Index w : spec.hidden_widths) add_layer(w);
  add_layer(spec.output_dim);
  return p;
}

std::vector<Matrix*> parameter_slots(MlpParams& params) {
  std::vector<Matrix*> out;
  for (auto& l : params.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> parameter_slots(const MlpParams& params) {
  std::vector<const Matrix*> out;
  for (const auto& l : params.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

double temp_transform(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("temperature must lie in [0,1], got " + std::to_string(alpha));
  }
  return -2.0 * std::abs(alpha - 0.5) + 1.0;
}

Tensor temperature_column(std::span<const double> alpha) {
  Matrix t(static_cast<Index>(alpha.size()), 1);
  for (std::size_t i = 0; i < alpha.size(); ++i) t(static_cast<Index>(i), 0) = temp_transform(alpha[i]);
  return Tensor(std::move(t));
}

namespace {

Tensor activate(Activation a, const Tensor& x, double slope) {
  switch (a) {
    case Activation::Relu: return ad::relu(x);
    case Activation::LRelu: return ad::lrelu(x, slope);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
    case Activation::Linear: return x;
  }
  return x;
}

Tensor tabular_head(const TabularHeadSpec& spec, const Tensor& logits, const Matrix* gumbel) {
  const Index total_discrete = spec.width() - spec.continuous_dim;
  if (gumbel != nullptr && (gumbel->rows() != logits.rows() || gumbel->cols() != total_discrete)) {
    throw ShapeError("generator_forward: gumbel noise shape does not match discrete columns");
  }
  Tensor out;
  bool have = false;
  if (spec.continuous_dim > 0) {
    Tensor c = ad::slice_cols(logits, 0, spec.continuous_dim);
    out = spec.tanh_continuous ? ad::tanh(c) : c;
    have = true;
  }
  Index offset = spec.continuous_dim;
  Index noise_offset = 0;
  for (Index g : spec.discrete_groups) {
    Tensor block = ad::slice_cols(logits, offset, offset + g);
    if (gumbel != nullptr) {
      block = ad::add(block, Tensor(Matrix(gumbel->middleCols(noise_offset, g))));
    }
    block = ad::softmax_rows(ad::scale(block, 1.0 / spec.gumbel_temperature));
    out = have ? ad::concat_cols(out, block) : block;
    have = true;
    offset += g;
    noise_offset += g;
  }
  return out;
}

}  // namespace

ForwardTrace forward_trace(const MlpSpec& spec, const BoundMlp& net, const Tensor& x,
                           std::span<const double> alpha, const Matrix* gumbel) {
  if (x.cols() != spec.input_dim) {
    throw ShapeError("network input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(spec.input_dim));
  }
  if (static_cast<Index>(alpha.size()) != x.rows()) {
    throw ShapeError("network input has " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(alpha.size()) + " temperatures");
  }
  if (net.weights.size() != spec.hidden_widths.size() + 1) {
    throw ShapeError("parameter layer count does not match network spec");
  }
  Tensor h = ad::concat_cols(x, temperature_column(alpha));
  for (std::size_t l = 0; l < spec.hidden_widths.size(); ++l) {
    h = activate(spec.activations[l], ad::add(ad::matmul(h, net.weights[l]), net.biases[l]),
                 spec.lrelu_slope);
  }
  ForwardTrace tr;
  tr.penultimate = h;
  tr.pre_head = ad::add(ad::matmul(h, net.weights.back()), net.biases.back());
  switch (spec.head) {
    case Head::Linear: tr.output = tr.pre_head; break;
    case Head::Sigmoid: tr.output = ad::sigmoid(tr.pre_head); break;
    case Head::Tanh: tr.output = ad::tanh(tr.pre_head); break;
    case Head::Tabular: tr.output = tabular_head(*spec.tabular, tr.pre_head, gumbel); break;
  }
  return tr;
}

Tensor critic_forward(const MlpSpec& spec, const BoundMlp& net, const Tensor& x,
                      std::span<const double> alpha) {
  return forward_trace(spec, net, x, alpha).output;
}

Tensor generator_forward(const MlpSpec& spec, const BoundMlp& net, const Tensor& z,
                         std::span<const double> alpha, const Matrix* gumbel) {
  return forward_trace(spec, net, z, alpha, gumbel).output;
}

Matrix sample_gumbel(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    m.data()[i] = -std::log(-std::log(u));
  }
  return m;
}

}  // namespace ptgan::nets
