#pragma once

// Divergence losses, gradient penalties on the critic and the generator-side
// fairness penalty. All functions return scalar tensors on the caller's graph.

#include <span>
#include <string>
#include <vector>

#include "ptgan/autodiff.hpp"
#include "ptgan/nets.hpp"
#include "ptgan/random.hpp"
#include "ptgan/tempering.hpp"

namespace ptgan::objectives {

using ad::Index;
using ad::Matrix;
using ad::Tensor;

/// Neural distance, Jensen-Shannon, Pearson chi-square.
enum class LossKind { ND, JSD, PD };

/// Coherency, maximum gradient-norm, mean gradient-norm, and zero-centred
/// real-data gradient penalties.
enum class PenaltyKind { None, CP, MP, GP, R1 };

std::string to_string(LossKind k);
std::string to_string(PenaltyKind k);
LossKind loss_from_string(const std::string& s);
PenaltyKind penalty_from_string(const std::string& s);

/// 100 for CP, 1 for MP, 10 for GP and R1, 0 for none.
double default_lambda(PenaltyKind k);

/// Critic head the loss expects: sigmoid for JSD, linear otherwise.
nets::Head critic_head(LossKind k);

/// Objective the critic ascends.
///   ND:  mean(D_real) - mean(D_fake)
///   JSD: mean(log D_real) + mean(log(1 - D_fake))
///   PD:  -[mean((D_real - 1)^2) + mean(D_fake^2)] / 2
/// JSD throws DomainError for outputs outside (0, 1).
Tensor critic_loss(LossKind kind, const Tensor& d_real, const Tensor& d_fake);

/// Objective the generator descends.
///   ND:  -mean(D_fake)
///   JSD: -mean(log D_fake)        (non-saturating form)
///   PD:  mean((D_fake - 1)^2) / 2
Tensor generator_loss(LossKind kind, const Tensor& d_fake);

/// Per-row gradient of D(x, t(alpha)) with respect to the data columns of x,
/// as nodes of `graph` so it can be differentiated again.
Tensor input_gradient(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                      const Matrix& x, std::span<const double> alpha);

/// lambda * mean_i (grad D(q_tilde_i, t(alpha_tilde_i)) . (q1_i - q2_i))^2.
Tensor coherency_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                         const tempering::TemperedBatch& batch, double lambda);

/// lambda * max_i ||grad D(x_i)||^2.
Tensor mp_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& points, std::span<const double> alpha, double lambda);

/// lambda * mean_i (||grad D(x_i)|| - 1)^2.
Tensor gp_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& points, std::span<const double> alpha, double lambda);

/// (lambda / 2) * mean_i ||grad D(x_i)||^2 at real rows.
Tensor r1_penalty(ad::Graph& graph, const nets::MlpSpec& spec, const nets::BoundMlp& critic,
                  const Matrix& real, std::span<const double> alpha, double lambda);

/// Rows nu_i * real_i + (1 - nu_i) * fake_i with nu_i ~ Unif(0, 1).
Matrix interpolation_points(const Matrix& real, const Matrix& fake, Rng& rng);

/// lambda * |E[Y A] / E[A] - E[Y (1 - A)] / E[1 - A]| over soft columns of the
/// generator output. Returns an untracked zero and logs a warning when either
/// group weight is below 1e-6.
Tensor fairness_penalty(const Tensor& gen_output, Index y_col, Index a_col, double lambda);

}  // namespace ptgan::objectives
