#include "ptgan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ptgan/error.hpp"

namespace ptgan::trainer {

using ad::Tensor;
using objectives::LossKind;
using objectives::PenaltyKind;

namespace {

constexpr std::uint64_t kCriticInitStream = 1;
constexpr std::uint64_t kGeneratorInitStream = 2;
constexpr std::uint64_t kBatchStream = 3;
constexpr std::uint64_t kNoiseStream = 4;
constexpr std::uint64_t kEvalStream = 5;
constexpr std::uint64_t kSamplerStream = 7;

void require_finite(double v, const char* what, long iteration) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at iteration " + std::to_string(iteration),
                         iteration);
  }
}

double sample_variance(const Matrix& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(n - 1);
}

// Sum over columns of the across-row sample variance.
double column_variance_sum(const Matrix& g) {
  if (g.rows() < 2) return 0.0;
  const Matrix centered = g.rowwise() - g.colwise().mean();
  return centered.array().square().sum() / static_cast<double>(g.rows() - 1);
}

// d l_i / d D for the real and fake terms of the per-item loss.
void per_item_output_grads(LossKind kind, const Matrix& dr, const Matrix& df, Matrix& a, Matrix& b) {
  switch (kind) {
    case LossKind::ND:
      a = Matrix::Ones(dr.rows(), 1);
      b = Matrix::Constant(df.rows(), 1, -1.0);
      break;
    case LossKind::JSD:
      a = dr.array().inverse();
      b = -(1.0 - df.array()).inverse();
      break;
    case LossKind::PD:
      a = -(dr.array() - 1.0);
      b = -df.array();
      break;
  }
}

Matrix head_derivative(nets::Head head, const Matrix& out) {
  switch (head) {
    case nets::Head::Linear: return Matrix::Ones(out.rows(), out.cols());
    case nets::Head::Sigmoid: return out.array() * (1.0 - out.array());
    case nets::Head::Tanh: return 1.0 - out.array().square();
    case nets::Head::Tabular: break;
  }
  throw ConfigError("critic head must be linear, sigmoid or tanh");
}

// Trace of the per-item gradient covariance of the last critic layer.
double last_layer_trace(const TrainConfig& cfg, const nets::ForwardTrace& tr, const nets::ForwardTrace& tf) {
  Matrix a, b;
  per_item_output_grads(cfg.loss, tr.output.value(), tf.output.value(), a, b);
  a.array() *= head_derivative(cfg.critic.head, tr.output.value()).array();
  b.array() *= head_derivative(cfg.critic.head, tf.output.value()).array();
  const Matrix& hr = tr.penultimate.value();
  const Matrix& hf = tf.penultimate.value();
  Matrix g(hr.rows(), hr.cols() + 1);
  g.leftCols(hr.cols()) = hr.array().colwise() * a.col(0).array() + hf.array().colwise() * b.col(0).array();
  g.col(hr.cols()) = a + b;
  return column_variance_sum(g);
}

Matrix gumbel_for(const nets::MlpSpec& spec, Index rows, Rng& rng) {
  if (spec.head != nets::Head::Tabular) return {};
  const auto& groups = spec.tabular->discrete_groups;
  const Index cols = std::accumulate(groups.begin(), groups.end(), Index{0});
  return nets::sample_gumbel(rows, cols, rng);
}

std::vector<Matrix> values(const std::vector<Tensor>& ts) {
  std::vector<Matrix> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.value());
  return out;
}

MetricsRecord base_record(long iteration, const CriticStepOutput& c, const Models* models,
                          const nets::MlpParams& critic) {
  MetricsRecord rec;
  rec.iteration = iteration;
  rec.loss_mean = c.loss_mean;
  rec.loss_var = c.loss_var;
  rec.critic_objective = c.objective;
  rec.penalty = c.penalty;
  rec.grad_cov_trace = c.grad_cov_trace;
  rec.grad_var_sum = c.grad_var_sum;
  rec.critic_norms = critic.frobenius_norms();
  if (models) rec.generator_norms = models->generator.frobenius_norms();
  return rec;
}

bool is_checkpoint(long iteration, long stride, long total) {
  return iteration % stride == 0 || iteration == total;
}

}  // namespace

AdamState adam_init(const nets::MlpParams& params) {
  AdamState s;
  for (const Matrix* p : nets::parameter_slots(params)) {
    s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Matrix*> params, const std::vector<Matrix>& grads,
               double lr, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    if (p.rows() != grads[k].rows() || p.cols() != grads[k].cols() || p.rows() != state.m[k].rows() ||
        p.cols() != state.m[k].cols()) {
      throw ShapeError("adam_step: shape mismatch in slot " + std::to_string(k));
    }
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k].cwiseProduct(grads[k]);
    p.array() -= lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + cfg.eps);
  }
}

void inject_gradient_noise(std::vector<Matrix>& grads, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ConfigError("gradient noise sigma must be >= 0");
  if (sigma == 0.0) return;
  for (auto& g : grads) {
    for (Index i = 0; i < g.size(); ++i) g.data()[i] += rng.normal(0.0, sigma);
  }
}

void TrainConfig::validate(Index data_dim) const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (iterations < 0 || fairness.penalty_iterations < 0) throw ConfigError("iterations must be >= 0");
  if (critic_steps < 1) throw ConfigError("critic_steps must be >= 1");
  if (!(lr_critic > 0.0) || !(lr_generator > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be > 0");
  if (lambda < 0.0) throw ConfigError("penalty weight must be >= 0");
  if (grad_noise_sigma < 0.0) throw ConfigError("gradient noise sigma must be >= 0");
  if (checkpoint_stride < 0) throw ConfigError("checkpoint stride must be >= 0");
  if (noise_dim < 1) throw ConfigError("noise_dim must be >= 1");
  tempering::AlphaDist{r}.validate();
  critic.validate();
  generator.validate();
  if (critic.input_dim != data_dim) throw ConfigError("critic input width does not match the data");
  if (critic.output_dim != 1) throw ConfigError("critic must have one output");
  if (critic.head != objectives::critic_head(loss)) {
    throw ConfigError("critic head does not match loss " + objectives::to_string(loss));
  }
  if (generator.input_dim != noise_dim) throw ConfigError("generator input width must equal noise_dim");
  if (generator.output_dim != data_dim) throw ConfigError("generator output width does not match the data");
  if (fairness.lambda_f < 0.0) throw ConfigError("fairness weight must be >= 0");
  if (fairness.fair_batches && batch_size % 2 != 0) throw ConfigError("fair batches need an even batch_size");
  if (fairness.lambda_f > 0.0) {
    const auto in_range = [&](Index c) { return c >= 0 && c < data_dim; };
    if (!in_range(fairness.label_column) || !in_range(fairness.sensitive_column)) {
      throw ConfigError("fairness penalty needs label and sensitive columns");
    }
  }
}

long TrainConfig::resolved_stride() const {
  if (checkpoint_stride > 0) return checkpoint_stride;
  return std::max<long>(1, total_iterations() / 50);
}

nets::MlpSpec default_critic(Index data_dim, LossKind loss, Index width, int depth) {
  return nets::MlpSpec::uniform(data_dim, width, depth, 1, nets::Activation::Relu, objectives::critic_head(loss));
}

nets::MlpSpec default_generator(Index noise_dim, Index data_dim, Index width, int depth) {
  return nets::MlpSpec::uniform(noise_dim, width, depth, data_dim, nets::Activation::Relu);
}

Models init_models(const TrainConfig& cfg) {
  return {nets::init_params(cfg.critic, Rng::derive(cfg.seed, kCriticInitStream).next()),
          nets::init_params(cfg.generator, Rng::derive(cfg.seed, kGeneratorInitStream).next())};
}

nlohmann::json MetricsRecord::to_json() const {
  nlohmann::json j;
  j["v"] = kMetricsVersion;
  j["iteration"] = iteration;
  j["loss_mean"] = loss_mean;
  j["loss_var"] = loss_var;
  j["critic_objective"] = critic_objective;
  j["penalty"] = penalty;
  j["generator_loss"] = generator_loss;
  j["grad_cov_trace"] = grad_cov_trace;
  if (grad_var_sum) j["grad_var_sum"] = *grad_var_sum;
  j["critic_norms"] = critic_norms;
  j["generator_norms"] = generator_norms;
  if (eval.is_object()) {
    for (const auto& [k, v] : eval.items()) j[k] = v;
  }
  return j;
}

Matrix generate(const nets::MlpSpec& spec, const nets::MlpParams& params, std::span<const double> alpha,
                Index noise_dim, Rng& rng) {
  const Index n = static_cast<Index>(alpha.size());
  const Matrix z = rng.uniform_matrix(n, noise_dim, -1.0, 1.0);
  const Matrix gumbel = gumbel_for(spec, n, rng);
  return nets::generator_forward(spec, nets::constants(params), Tensor(z), alpha,
                                 gumbel.size() ? &gumbel : nullptr)
      .value();
}

Matrix per_item_loss(LossKind kind, const Matrix& d_real, const Matrix& d_fake) {
  if (d_real.rows() != d_fake.rows()) throw ShapeError("per_item_loss: real and fake row counts differ");
  switch (kind) {
    case LossKind::ND: return d_real - d_fake;
    case LossKind::JSD: return d_real.array().log() + (1.0 - d_fake.array()).log();
    case LossKind::PD: return -0.5 * ((d_real.array() - 1.0).square() + d_fake.array().square());
  }
  return {};
}

double full_gradient_variance(const TrainConfig& cfg, const nets::MlpParams& critic, const Matrix& real,
                              const Matrix& fake, std::span<const double> alpha) {
  const Index n = real.rows();
  if (n < 2) return 0.0;
  const std::size_t total = critic.parameter_count();
  Matrix g(n, static_cast<Index>(total));
  for (Index i = 0; i < n; ++i) {
    ad::Graph graph;
    const auto net = nets::bind(graph, critic);
    const auto a = alpha.subspan(static_cast<std::size_t>(i), 1);
    const Tensor dr = nets::critic_forward(cfg.critic, net, Tensor(Matrix(real.row(i))), a);
    const Tensor df = nets::critic_forward(cfg.critic, net, Tensor(Matrix(fake.row(i))), a);
    const Tensor li = objectives::critic_loss(cfg.loss, dr, df);
    const auto params = net.all();
    const auto grads = graph.backward(li, params);
    Index off = 0;
    for (const auto& gr : grads) {
      const Matrix& m = gr.value();
      g.row(i).segment(off, m.size()) = Eigen::Map<const Eigen::RowVectorXd>(m.data(), m.size());
      off += m.size();
    }
  }
  return column_variance_sum(g);
}

CriticStepOutput critic_step(const TrainConfig& cfg, nets::MlpParams& critic, AdamState& adam,
                             const tempering::TemperedBatch& batch, const Matrix& fake, Rng& rng,
                             Rng& noise_rng, bool instrument, bool full_variance) {
  ad::Graph graph;
  const auto net = nets::bind(graph, critic);
  const auto& alpha = batch.alpha1;
  const auto tr = nets::forward_trace(cfg.critic, net, Tensor(batch.q1), alpha);
  const auto tf = nets::forward_trace(cfg.critic, net, Tensor(fake), alpha);
  const Tensor loss = objectives::critic_loss(cfg.loss, tr.output, tf.output);

  Tensor penalty = Tensor::scalar(0.0);
  switch (cfg.penalty) {
    case PenaltyKind::None: break;
    case PenaltyKind::CP:
      penalty = objectives::coherency_penalty(graph, cfg.critic, net, batch, cfg.lambda);
      break;
    case PenaltyKind::MP:
      penalty = objectives::mp_penalty(graph, cfg.critic, net, objectives::interpolation_points(batch.q1, fake, rng),
                                       alpha, cfg.lambda);
      break;
    case PenaltyKind::GP:
      penalty = objectives::gp_penalty(graph, cfg.critic, net, objectives::interpolation_points(batch.q1, fake, rng),
                                       alpha, cfg.lambda);
      break;
    case PenaltyKind::R1:
      penalty = objectives::r1_penalty(graph, cfg.critic, net, batch.q1, alpha, cfg.lambda);
      break;
  }
  const Tensor objective = ad::sub(loss, penalty);

  CriticStepOutput out;
  out.objective = objective.item();
  out.penalty = penalty.item();
  if (instrument) {
    const Matrix li = per_item_loss(cfg.loss, tr.output.value(), tf.output.value());
    out.loss_mean = li.mean();
    out.loss_var = sample_variance(li);
    out.grad_cov_trace = last_layer_trace(cfg, tr, tf);
    if (full_variance) out.grad_var_sum = full_gradient_variance(cfg, critic, batch.q1, fake, alpha);
  }

  const auto params = net.all();
  auto grads = values(graph.backward(ad::scale(objective, -1.0), params));
  inject_gradient_noise(grads, cfg.grad_noise_sigma, noise_rng);
  adam_step(adam, nets::parameter_slots(critic), grads, cfg.lr_critic, cfg.adam);
  return out;
}

Trainer::Trainer(TrainConfig cfg, Matrix data, std::optional<tempering::GroupedData> groups)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      groups_(std::move(groups)),
      batch_rng_(Rng::derive(cfg_.seed, kBatchStream)),
      noise_rng_(Rng::derive(cfg_.seed, kNoiseStream)),
      eval_rng_(Rng::derive(cfg_.seed, kEvalStream)) {
  if (cfg_.fairness.fair_batches) {
    if (!groups_) throw ConfigError("fair batches need data split by the sensitive attribute");
    if (groups_->rows_a0.rows() == 0 || groups_->rows_a1.rows() == 0) {
      throw ConfigError("fair batches need rows in both sensitive groups");
    }
    cfg_.validate(groups_->rows_a0.cols());
  } else {
    if (data_.rows() < 2) throw ConfigError("training data needs at least two rows");
    cfg_.validate(data_.cols());
  }
  models_ = init_models(cfg_);
  adam_critic_ = adam_init(models_.critic);
  adam_generator_ = adam_init(models_.generator);
  stride_ = cfg_.resolved_stride();
}

std::optional<MetricsRecord> Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const long it = iteration_ + 1;
  const long total = cfg_.total_iterations();
  const bool checkpoint = is_checkpoint(it, stride_, total);
  const tempering::AlphaDist dist{cfg_.r};

  tempering::TemperedBatch batch;
  CriticStepOutput critic_out;
  for (int k = 0; k < cfg_.critic_steps; ++k) {
    batch = cfg_.fairness.fair_batches
                ? tempering::make_fair_batch(*groups_, cfg_.batch_size, dist, cfg_.noise_dim, batch_rng_)
                : tempering::make_batch(data_, cfg_.batch_size, dist, cfg_.noise_dim, batch_rng_);
    const Matrix& z = cfg_.interpolated_z ? batch.z_alpha : batch.z;
    const Matrix gumbel = gumbel_for(cfg_.generator, batch.size(), batch_rng_);
    const Matrix fake = nets::generator_forward(cfg_.generator, nets::constants(models_.generator), Tensor(z),
                                                batch.alpha1, gumbel.size() ? &gumbel : nullptr)
                            .value();
    const bool last = k + 1 == cfg_.critic_steps;
    critic_out = critic_step(cfg_, models_.critic, adam_critic_, batch, fake, batch_rng_, noise_rng_,
                             checkpoint && last, cfg_.full_grad_variance);
    require_finite(critic_out.objective, "critic objective", it);
  }

  ad::Graph graph;
  const auto gen = nets::bind(graph, models_.generator);
  const Matrix& z = cfg_.interpolated_z ? batch.z_alpha : batch.z;
  const Matrix gumbel = gumbel_for(cfg_.generator, batch.size(), batch_rng_);
  const Tensor fake = nets::generator_forward(cfg_.generator, gen, Tensor(z), batch.alpha1,
                                              gumbel.size() ? &gumbel : nullptr);
  const Tensor d_fake = nets::critic_forward(cfg_.critic, nets::constants(models_.critic), fake, batch.alpha1);
  Tensor g_loss = objectives::generator_loss(cfg_.loss, d_fake);
  const auto& fair = cfg_.fairness;
  const bool fair_phase = fair.lambda_f > 0.0 && (fair.penalty_iterations == 0 || it > cfg_.iterations);
  if (fair_phase) {
    g_loss = ad::add(g_loss, objectives::fairness_penalty(fake, fair.label_column, fair.sensitive_column, fair.lambda_f));
  }
  const double g_value = g_loss.item();
  require_finite(g_value, "generator loss", it);
  const auto params = gen.all();
  const auto grads = values(graph.backward(g_loss, params));
  adam_step(adam_generator_, nets::parameter_slots(models_.generator), grads, cfg_.lr_generator, cfg_.adam);

  iteration_ = it;
  if (!checkpoint) return std::nullopt;
  MetricsRecord rec = base_record(it, critic_out, &models_, models_.critic);
  rec.generator_loss = g_value;
  for (double v : rec.critic_norms) require_finite(v, "critic weight norm", it);
  for (double v : rec.generator_norms) require_finite(v, "generator weight norm", it);
  if (evaluator_) rec.eval = evaluator_(models_, it, eval_rng_);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<MetricsRecord> Trainer::run(const RecordSink& sink) {
  std::vector<MetricsRecord> log;
  while (iteration_ < cfg_.total_iterations()) {
    if (auto rec = step()) {
      if (sink) sink(*rec);
      log.push_back(std::move(*rec));
    }
  }
  return log;
}

std::vector<MetricsRecord> probe_fixed_generator(const TrainConfig& cfg, const Matrix& data,
                                                 const Sampler& sampler, const RecordSink& sink) {
  if (data.rows() < 2) throw ConfigError("probe data needs at least two rows");
  if (cfg.critic.input_dim != data.cols()) throw ConfigError("critic input width does not match the data");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.iterations < 0) throw ConfigError("iterations must be >= 0");
  cfg.critic.validate();
  const tempering::AlphaDist dist{cfg.r};
  dist.validate();

  nets::MlpParams critic = init_models(cfg).critic;
  AdamState adam = adam_init(critic);
  Rng batch_rng = Rng::derive(cfg.seed, kBatchStream);
  Rng noise_rng = Rng::derive(cfg.seed, kNoiseStream);
  Rng sampler_rng = Rng::derive(cfg.seed, kSamplerStream);
  const long stride = cfg.checkpoint_stride > 0 ? cfg.checkpoint_stride : std::max<long>(1, cfg.iterations / 50);

  std::vector<MetricsRecord> log;
  for (long it = 1; it <= cfg.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    const auto batch = tempering::make_batch(data, cfg.batch_size, dist, cfg.noise_dim, batch_rng);
    const Matrix f1 = sampler(batch.size(), sampler_rng);
    const Matrix f2 = sampler(batch.size(), sampler_rng);
    const Matrix fake = tempering::interpolate(f1, f2, batch.alpha1);
    const bool checkpoint = is_checkpoint(it, stride, cfg.iterations);
    const auto out = critic_step(cfg, critic, adam, batch, fake, batch_rng, noise_rng, checkpoint, true);
    require_finite(out.objective, "critic objective", it);
    if (!checkpoint) continue;
    MetricsRecord rec = base_record(it, out, nullptr, critic);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (sink) sink(rec);
    log.push_back(std::move(rec));
  }
  return log;
}

std::vector<std::vector<MetricsRecord>> probe_variance_reduction(const TrainConfig& cfg, const Matrix& data,
                                                                 const Sampler& sampler,
                                                                 const std::vector<double>& r_values) {
  std::vector<std::vector<MetricsRecord>> logs;
  for (double r : r_values) {
    TrainConfig arm = cfg;
    arm.r = r;
    logs.push_back(probe_fixed_generator(arm, data, sampler));
  }
  return logs;
}

namespace {

struct TraceEstimate {
  double trace = 0.0;
  double se = 0.0;
};

// Trace of the sample covariance of the rows of g and its standard error.
TraceEstimate trace_with_se(const Matrix& g) {
  const Index n = g.rows();
  const Matrix centered = g.rowwise() - g.colwise().mean();
  const Matrix s = centered.rowwise().squaredNorm();
  const double scale = static_cast<double>(n) / static_cast<double>(n - 1);
  TraceEstimate e;
  e.trace = s.mean() * scale;
  e.se = std::sqrt(sample_variance(s) / static_cast<double>(n)) * scale;
  return e;
}

Matrix gather(const Matrix& data, Index n, Rng& rng) {
  Matrix out(n, data.cols());
  for (Index i = 0; i < n; ++i) out.row(i) = data.row(static_cast<Index>(rng.index(static_cast<std::size_t>(data.rows()))));
  return out;
}

}  // namespace

CovarianceCheck linear_critic_covariance(const Matrix& data, const std::function<Matrix(const Matrix& z)>& g0,
                                Index noise_dim, double r, Index n_b, Index m_b, long batches, Rng& rng) {
  if (batches < 2) throw ConfigError("covariance check needs at least two batches");
  if (n_b < 1 || m_b < 1) throw ConfigError("batch sizes must be >= 1");
  const tempering::AlphaDist dist{r};
  dist.validate();
  const Index d = data.cols();

  // Gradient of mean D(real) - mean D(fake) w.r.t. (w, v); the bias gradient is 0.
  Matrix vanilla(batches, d + 1);
  Matrix tempered(batches, d + 1);
  for (long k = 0; k < batches; ++k) {
    const Matrix x = gather(data, n_b, rng);
    const Matrix g = g0(rng.uniform_matrix(m_b, noise_dim, -1.0, 1.0));
    vanilla.row(k) << x.colwise().mean() - g.colwise().mean(), 0.0;
  }
  for (long k = 0; k < batches; ++k) {
    const auto a_real = tempering::sample_alpha(dist, static_cast<std::size_t>(n_b), rng);
    const Matrix q = tempering::interpolate(gather(data, n_b, rng), gather(data, n_b, rng), a_real);
    const auto a_fake = tempering::sample_alpha(dist, static_cast<std::size_t>(m_b), rng);
    const Matrix both = g0(rng.uniform_matrix(2 * m_b, noise_dim, -1.0, 1.0));
    const Matrix g = tempering::interpolate(both.topRows(m_b), both.bottomRows(m_b), a_fake);
    const double mean_real = std::accumulate(a_real.begin(), a_real.end(), 0.0) / static_cast<double>(n_b);
    const double mean_fake = std::accumulate(a_fake.begin(), a_fake.end(), 0.0) / static_cast<double>(m_b);
    tempered.row(k) << q.colwise().mean() - g.colwise().mean(), mean_real - mean_fake;
  }

  const auto v = trace_with_se(vanilla);
  const auto t = trace_with_se(tempered);
  const double factor = 2.0 / 3.0 + r / 3.0;
  CovarianceCheck res;
  res.vanilla_trace = v.trace;
  res.vanilla_se = v.se;
  res.tempered_trace = t.trace;
  res.tempered_se = t.se;
  res.predicted = factor * v.trace +
                  dist.variance() * (1.0 / static_cast<double>(n_b) + 1.0 / static_cast<double>(m_b));
  res.predicted_se = factor * v.se;
  res.z_score = (res.tempered_trace - res.predicted) / std::hypot(res.tempered_se, res.predicted_se);
  return res;
}

}  // namespace ptgan::trainer
