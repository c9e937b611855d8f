#include "ptgan/objectives.hpp"

#include <spdlog/spdlog.h>

#include "ptgan/error.hpp"

namespace ptgan::objectives {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::ND: return "nd";
    case LossKind::JSD: return "jsd";
    case LossKind::PD: return "pd";
  }
  return "nd";
}

std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::CP: return "cp";
    case PenaltyKind::MP: return "mp";
    case PenaltyKind::GP: return "gp";
    case PenaltyKind::R1: return "r1";
  }
  return "none";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "nd") return LossKind::ND;
  if (s == "jsd") return LossKind::JSD;
  if (s == "pd") return LossKind::PD;
  throw ConfigError("unknown loss '" + s + "' (expected nd, jsd or pd)");
}

PenaltyKind penalty_from_string(const std::string& s) {
  if (s == "none") return PenaltyKind::None;
  if (s == "cp") return PenaltyKind::CP;
  if (s == "mp") return PenaltyKind::MP;
  if (s == "gp") return PenaltyKind::GP;
  if (s == "r1") return PenaltyKind::R1;
  throw ConfigError("unknown penalty '" + s + "' (expected none, cp, mp or gp)");
}

double default_lambda(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::None: return 0.0;
    case PenaltyKind::CP: return 100.0;
    case PenaltyKind::MP: return 1.0;
    case PenaltyKind::GP: return 10.0;
    case PenaltyKind::R1: return 10.0;
  }
  return 0.0;
}

nets::Head critic_head(LossKind k) {
  return k == LossKind::JSD ? nets::Head::Sigmoid : nets::Head::Linear;
}

namespace {

void check_probabilities(const Tensor& t, const char* what) {
  const auto& v = t.value();
  if (!(v.minCoeff() > 0.0 && v.maxCoeff() < 1.0)) {
    throw DomainError(std::string("JSD loss: ") + what + " outputs must lie in (0,1)");
  }
}

Tensor half_mean_square(const Tensor& t, double shift) {
  return ad::scale(ad::mean_all(ad::square(ad::add_scalar(t, shift))), 0.5);
}

}  // namespace

Tensor critic_loss(LossKind kind, const Tensor& d_real, const Tensor& d_fake) {
  switch (kind) {
    case LossKind::ND:
      return ad::sub(ad::mean_all(d_real), ad::mean_all(d_fake));
    case LossKind::JSD:
      check_probabilities(d_real, "real");
      check_probabilities(d_fake, "fake");
      return ad::add(ad::mean_all(ad::log(d_real)),
                     ad::mean_all(ad::log(ad::add_scalar(ad::scale(d_fake, -1.0), 1.0))));
    case LossKind::PD:
      return ad::scale(ad::add(half_mean_square(d_real, -1.0), half_mean_square(d_fake, 0.0)), -1.0);
  }
  return Tensor::scalar(0.0);
}

Tensor generator_loss(LossKind kind, const Tensor& d_fake) {
  switch (kind) {
    case LossKind::ND:
      return ad::scale(ad::mean_all(d_fake), -1.0);
    case LossKind::JSD:
      check_probabilities(d_fake, "fake");
      return ad::scale(ad::mean_all(ad::log(d_fake)), -1.0);
    case LossKind::PD:
      return half_mean_square(d_fake, -1.0);
  }
  return Tensor::scalar(0.0);
}

Tensor input_gradient(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                      const Matrix& x, std::span<const double> alpha) {
  const Tensor xin = graph.leaf(x);
  const Tensor d = nets::critic_forward(spec, critic, xin, alpha);
  // Rows do not interact, so the gradient of the sum is the per-row gradient.
  const Tensor root = ad::sum_all(d);
  return graph.backward(root, std::span<const Tensor>(&xin, 1), true)[0];
}

Tensor coherency_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                         const tempering::TemperedBatch& batch, double lambda) {
  if (lambda < 0.0) throw ConfigError("coherency penalty weight must be >= 0");
  const Tensor g = input_gradient(graph, spec, critic, batch.q_tilde, batch.alpha_tilde);
  const Tensor dir(Matrix(batch.q1 - batch.q2));
  return ad::scale(ad::mean_all(ad::square(ad::dot_rows(g, dir))), lambda);
}

Tensor mp_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& points, std::span<const double> alpha, double lambda) {
  if (lambda < 0.0) throw ConfigError("maximum penalty weight must be >= 0");
  const Tensor g = input_gradient(graph, spec, critic, points, alpha);
  return ad::scale(ad::max_all(ad::row_sums(ad::square(g))), lambda);
}

Tensor gp_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& points, std::span<const double> alpha, double lambda) {
  if (lambda < 0.0) throw ConfigError("gradient penalty weight must be >= 0");
  const Tensor g = input_gradient(graph, spec, critic, points, alpha);
  const Tensor norm = ad::sqrt(ad::row_sums(ad::square(g)));
  return ad::scale(ad::mean_all(ad::square(ad::add_scalar(norm, -1.0))), lambda);
}

Tensor r1_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& real, std::span<const double> alpha, double lambda) {
  if (lambda < 0.0) throw ConfigError("real-data penalty weight must be >= 0");
  const Tensor g = input_gradient(graph, spec, critic, real, alpha);
  return ad::scale(ad::mean_all(ad::row_sums(ad::square(g))), 0.5 * lambda);
}

Matrix interpolation_points(const Matrix& real, const Matrix& fake, Rng& rng) {
  std::vector<double> nu(static_cast<std::size_t>(real.rows()));
  for (auto& v : nu) v = rng.uniform();
  return tempering::interpolate(real, fake, nu);
}

Tensor fairness_penalty(const Tensor& gen_output, Index y_col, Index a_col, double lambda) {
  if (y_col < 0 || y_col >= gen_output.cols() || a_col < 0 || a_col >= gen_output.cols()) {
    throw ShapeError("fairness_penalty: column index out of range");
  }
  const Tensor y = ad::slice_cols(gen_output, y_col, y_col + 1);
  const Tensor a = ad::slice_cols(gen_output, a_col, a_col + 1);
  const Tensor not_a = ad::add_scalar(ad::scale(a, -1.0), 1.0);
  const double w1 = a.value().mean();
  const double w0 = not_a.value().mean();
  if (w1 < 1e-6 || w0 < 1e-6) {
    spdlog::warn("fairness penalty skipped: degenerate sensitive-group weight ({:.3g}, {:.3g})", w0, w1);
    return Tensor::scalar(0.0);
  }
  const Tensor rate1 = ad::mul(ad::mean_all(ad::mul(y, a)), ad::inv_or_zero(ad::mean_all(a)));
  const Tensor rate0 = ad::mul(ad::mean_all(ad::mul(y, not_a)), ad::inv_or_zero(ad::mean_all(not_a)));
  return ad::scale(ad::abs(ad::sub(rate1, rate0)), lambda);
}

}  // namespace ptgan::objectives
