#pragma once

// Alternating critic ascent / generator descent with Adam, per-checkpoint
// instrumentation, and the gradient-variance probes.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptgan/autodiff.hpp"
#include "ptgan/nets.hpp"
#include "ptgan/objectives.hpp"
#include "ptgan/random.hpp"
#include "ptgan/tempering.hpp"

namespace ptgan::trainer {

using ad::Index;
using ad::Matrix;

struct AdamConfig {
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

AdamState adam_init(const nets::MlpParams& params);

/// Bias-corrected Adam descent step on every slot of `params`.
void adam_step(AdamState& state, std::vector<Matrix*> params, const std::vector<Matrix>& grads,
               double lr, const AdamConfig& cfg);

/// Adds i.i.d. N(0, sigma^2) to every gradient entry.
void inject_gradient_noise(std::vector<Matrix>& grads, double sigma, Rng& rng);

struct FairnessConfig {
  bool fair_batches = false;     ///< pair every group-0 row with a group-1 row
  double lambda_f = 0.0;         ///< generator fairness penalty weight
  long penalty_iterations = 0;   ///< extra iterations with the penalty switched on
  Index label_column = -1;       ///< encoded column of the positive label level
  Index sensitive_column = -1;   ///< encoded column of group A = 1
};

struct TrainConfig {
  objectives::LossKind loss = objectives::LossKind::ND;
  objectives::PenaltyKind penalty = objectives::PenaltyKind::CP;
  double lambda = 100.0;
  double r = 0.9;
  Index batch_size = 100;
  long iterations = 1000;
  int critic_steps = 1;
  double lr_critic = 1e-4;
  double lr_generator = 1e-4;
  AdamConfig adam;
  std::uint64_t seed = 0;
  long checkpoint_stride = 0;  ///< 0 means iterations / 50
  bool interpolated_z = true;
  double grad_noise_sigma = 0.0;
  bool full_grad_variance = false;
  Index noise_dim = 4;
  nets::MlpSpec critic;
  nets::MlpSpec generator;
  FairnessConfig fairness;

  /// Throws ConfigError on inconsistent settings.
  void validate(Index data_dim) const;
  long total_iterations() const { return iterations + fairness.penalty_iterations; }
  long resolved_stride() const;
};

/// Default toy networks: `depth` hidden layers of `width` units.
nets::MlpSpec default_critic(Index data_dim, objectives::LossKind loss, Index width = 256, int depth = 4);
nets::MlpSpec default_generator(Index noise_dim, Index data_dim, Index width = 256, int depth = 4);

struct Models {
  nets::MlpParams critic;
  nets::MlpParams generator;
};

/// Deterministic initialization from the run seed.
Models init_models(const TrainConfig& cfg);

struct MetricsRecord {
  long iteration = 0;
  double loss_mean = 0.0;        ///< mean of per-item critic loss terms
  double loss_var = 0.0;         ///< their sample variance across the batch
  double critic_objective = 0.0; ///< loss minus penalty
  double penalty = 0.0;
  double generator_loss = 0.0;
  double grad_cov_trace = 0.0;   ///< last critic layer, per-item gradients
  std::optional<double> grad_var_sum;  ///< all critic parameters, elementwise
  std::vector<double> critic_norms;
  std::vector<double> generator_norms;
  nlohmann::json eval;           ///< evaluator output, null when absent
  double wall_seconds = 0.0;     ///< kept out of to_json() so logs are reproducible

  nlohmann::json to_json() const;
};

inline constexpr const char* kMetricsVersion = "v1";

/// Generator samples at the given temperatures from fresh Unif(-1,1) noise.
Matrix generate(const nets::MlpSpec& spec, const nets::MlpParams& params, std::span<const double> alpha,
                Index noise_dim, Rng& rng);

using Evaluator = std::function<nlohmann::json(const Models&, long iteration, Rng& rng)>;
using RecordSink = std::function<void(const MetricsRecord&)>;

class Trainer {
 public:
  /// `groups` is required when cfg.fairness.fair_batches is set.
  Trainer(TrainConfig cfg, Matrix data, std::optional<tempering::GroupedData> groups = std::nullopt);

  void set_evaluator(Evaluator e) { evaluator_ = std::move(e); }

  /// One outer iteration. Returns a record on checkpoint iterations.
  /// Throws NumericalError when a loss becomes non-finite.
  std::optional<MetricsRecord> step();

  /// Runs every remaining iteration, forwarding records to `sink`.
  std::vector<MetricsRecord> run(const RecordSink& sink = {});

  long iteration() const { return iteration_; }
  const Models& models() const { return models_; }
  Models& models() { return models_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  Matrix data_;
  std::optional<tempering::GroupedData> groups_;
  Models models_;
  AdamState adam_critic_;
  AdamState adam_generator_;
  Rng batch_rng_;
  Rng noise_rng_;
  Rng eval_rng_;
  Evaluator evaluator_;
  long iteration_ = 0;
  long stride_ = 1;
};

struct CriticStepOutput {
  double objective = 0.0;
  double penalty = 0.0;
  double loss_mean = 0.0;
  double loss_var = 0.0;
  double grad_cov_trace = 0.0;
  std::optional<double> grad_var_sum;
};

/// One critic update on a tempered batch against given fake rows (at the
/// batch's alpha1). `rng` draws penalty interpolation points, `noise_rng` the
/// injected gradient noise. Instrumentation fields are filled when
/// `instrument` is set.
CriticStepOutput critic_step(const TrainConfig& cfg, nets::MlpParams& critic, AdamState& adam,
                             const tempering::TemperedBatch& batch, const Matrix& fake, Rng& rng,
                             Rng& noise_rng, bool instrument, bool full_variance);

/// Per-item loss terms l_i whose mean is the critic loss.
Matrix per_item_loss(objectives::LossKind kind, const Matrix& d_real, const Matrix& d_fake);

/// Sample variance over rows, summed over columns, of per-item gradients of
/// l_i with respect to every critic parameter. Zero for a single row.
double full_gradient_variance(const TrainConfig& cfg, const nets::MlpParams& critic,
                              const Matrix& real, const Matrix& fake, std::span<const double> alpha);

using Sampler = std::function<Matrix(Index n, Rng& rng)>;

/// Critic-only training against a frozen sampler. Fake rows at temperature
/// alpha are alpha * f + (1 - alpha) * f' for two sampler draws. Every record
/// carries the full-network gradient variance.
std::vector<MetricsRecord> probe_fixed_generator(const TrainConfig& cfg, const Matrix& data,
                                                 const Sampler& sampler, const RecordSink& sink = {});

/// The same probe once per value of r, everything else shared.
std::vector<std::vector<MetricsRecord>> probe_variance_reduction(const TrainConfig& cfg, const Matrix& data,
                                                                 const Sampler& sampler,
                                                                 const std::vector<double>& r_values);

struct CovarianceCheck {
  double tempered_trace = 0.0;
  double tempered_se = 0.0;
  double vanilla_trace = 0.0;
  double vanilla_se = 0.0;
  double predicted = 0.0;  ///< (2/3 + r/3) vanilla + Var(alpha)(1/n_b + 1/m_b)
  double predicted_se = 0.0;
  double z_score = 0.0;    ///< (tempered - predicted) / combined standard error
};

/// Monte-Carlo gradient covariance of the linear critic D(x, alpha) = w.x + v alpha
/// + b. Tempered real rows are alpha x + (1 - alpha) x'; fake rows use a
/// generator satisfying G(z, alpha) = alpha G0(z1) + (1 - alpha) G0(z2) with
/// their own alpha draws.
CovarianceCheck linear_critic_covariance(const Matrix& data, const std::function<Matrix(const Matrix& z)>& g0,
                                Index noise_dim, double r, Index n_b, Index m_b, long batches, Rng& rng);

}  // namespace ptgan::trainer
