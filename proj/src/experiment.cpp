#include "ptgan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "ptgan/error.hpp"

namespace ptgan::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kSplitStream = 0x5b17;
constexpr std::uint64_t kSampleStream = 0x5a3b1e;

// Reads keys from one JSON object and rejects the ones never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
    return true;
  }

  Section child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    static const json empty = json::object();
    return Section(it == j_.end() ? empty : *it, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k.c_str()) + "'");
    }
  }

 private:
  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    if (key) p = path_.empty() ? key : path_ + "." + key;
    return p;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_arch(Section s, ArchConfig& a) {
  s.get("width", a.width);
  s.get("depth", a.depth);
  s.get("activation", a.activation);
  s.finish();
  nets::activation_from_string(a.activation);
}

json arch_json(const ArchConfig& a) {
  return {{"width", a.width}, {"depth", a.depth}, {"activation", a.activation}};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_alphas(const std::vector<double>& alphas, const char* what) {
  for (double a : alphas) require(a >= 0.0 && a <= 1.0, std::string(what) + " must lie in [0, 1]");
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) throw ConfigError("checkpoint matrix size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json params_json(const nets::MlpSpec& spec, const nets::MlpParams& p) {
  json layers = json::array();
  for (const auto& l : p.layers) layers.push_back({{"weight", matrix_json(l.weight)}, {"bias", matrix_json(l.bias)}});
  return {{"spec", spec_to_json(spec)}, {"layers", layers}};
}

nets::MlpParams params_from_json(const json& j, const nets::MlpSpec& expected, const char* which) {
  if (spec_to_json(spec_from_json(j.at("spec"))) != spec_to_json(expected)) {
    throw ConfigError(std::string("checkpoint ") + which + " architecture differs from the config");
  }
  nets::MlpParams p;
  for (const auto& l : j.at("layers")) p.layers.push_back({matrix_from_json(l.at("weight")), matrix_from_json(l.at("bias"))});
  const auto ref = nets::init_params(expected, 0);
  require(p.layers.size() == ref.layers.size(), std::string("checkpoint ") + which + " layer count mismatch");
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& a = p.layers[k];
    const auto& b = ref.layers[k];
    require(a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
                a.bias.rows() == b.bias.rows() && a.bias.cols() == b.bias.cols(),
            std::string("checkpoint ") + which + " layer " + std::to_string(k) + " shape mismatch");
  }
  return p;
}

struct RawSource {
  data::RawTable raw;
  data::TabularSchema schema;
};

RawSource raw_source(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.kind == "planted") {
    return {data::planted_discrimination_table(cfg.samples, cfg.strength, Rng::derive(seed, kDataStream).next()),
            data::planted_discrimination_schema()};
  }
  std::ifstream in(cfg.schema);
  if (!in) throw ConfigError("cannot read schema file '" + cfg.schema + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("schema file '" + cfg.schema + "': " + e.what());
  }
  return {data::read_csv(cfg.csv), data::TabularSchema::from_json(j)};
}

Dataset encode_split(const data::RawTable& raw, const data::TabularSchema& schema, double test_fraction,
                     std::uint64_t seed) {
  const auto table = data::encode(raw, schema);
  const auto [train_idx, test_idx] =
      data::split_indices(table.x.rows(), 1.0 - test_fraction, Rng::derive(seed, kSplitStream).next());
  Dataset d;
  d.x = data::take_rows(table.x, train_idx);
  d.test = data::take_rows(table.x, test_idx);
  d.meta = table.meta;
  return d;
}

data::RawTable samples_table(const Matrix& rows, const Dataset& data) {
  data::RawTable t;
  const Index d = rows.cols() - 1;
  if (data.meta) {
    t = data::inverse_transform(rows.leftCols(d), *data.meta);
  } else {
    for (Index c = 0; c < d; ++c) t.header.push_back("x" + std::to_string(c + 1));
    for (Index r = 0; r < rows.rows(); ++r) {
      std::vector<std::string> row;
      for (Index c = 0; c < d; ++c) row.push_back(format_double(rows(r, c)));
      t.rows.push_back(std::move(row));
    }
  }
  t.header.push_back("alpha");
  for (Index r = 0; r < rows.rows(); ++r) t.rows[static_cast<std::size_t>(r)].push_back(format_double(rows(r, d)));
  return t;
}

ExperimentConfig replicate_config(const ExperimentConfig& cfg, int i, const fs::path& dir) {
  ExperimentConfig c = cfg;
  c.seed = cfg.seed + static_cast<std::uint64_t>(i);
  c.train.seed = c.seed;
  c.replicates = 1;
  c.out = dir.string();
  return c;
}

Matrix sample_left_mode(Index n, double mu2, double sigma, Rng& rng) {
  return rng.normal_matrix(n, 1, sigma).array() - mu2;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.get("replicates", c.replicates);
  root.get("out", c.out);
  require(c.replicates >= 1, "replicates must be >= 1");

  auto ds = root.child("dataset");
  ds.get("kind", c.dataset.kind);
  ds.get("mu2", c.dataset.mu2);
  ds.get("samples", c.dataset.samples);
  ds.get("strength", c.dataset.strength);
  ds.get("csv", c.dataset.csv);
  ds.get("schema", c.dataset.schema);
  ds.get("test_fraction", c.dataset.test_fraction);
  ds.finish();
  static const std::set<std::string> kinds{"ring8", "two1d", "planted", "csv"};
  require(kinds.count(c.dataset.kind) == 1, "dataset.kind must be ring8, two1d, planted or csv");
  require(c.dataset.samples >= 2, "dataset.samples must be >= 2");
  require(c.dataset.test_fraction > 0.0 && c.dataset.test_fraction < 1.0, "dataset.test_fraction must lie in (0, 1)");
  if (c.dataset.kind == "csv") require(!c.dataset.csv.empty() && !c.dataset.schema.empty(), "csv datasets need csv and schema paths");
  const bool tabular = c.dataset.tabular();

  auto& t = c.train;
  auto tr = root.child("train");
  std::string loss = "nd", penalty = "cp";
  tr.get("loss", loss);
  tr.get("penalty", penalty);
  t.loss = objectives::loss_from_string(loss);
  t.penalty = objectives::penalty_from_string(penalty);
  t.lambda = objectives::default_lambda(t.penalty);
  tr.get("lambda", t.lambda);
  tr.get("batch_size", t.batch_size);
  tr.get("iterations", t.iterations);
  tr.get("critic_steps", t.critic_steps);
  tr.get("lr_critic", t.lr_critic);
  tr.get("lr_generator", t.lr_generator);
  tr.get("beta1", t.adam.beta1);
  tr.get("beta2", t.adam.beta2);
  tr.get("eps", t.adam.eps);
  tr.get("checkpoint_stride", t.checkpoint_stride);
  tr.get("interpolated_z", t.interpolated_z);
  tr.get("grad_noise_sigma", t.grad_noise_sigma);
  tr.get("full_grad_variance", t.full_grad_variance);
  t.noise_dim = tabular ? 16 : 4;
  tr.get("noise_dim", t.noise_dim);
  read_arch(tr.child("critic"), c.critic);
  read_arch(tr.child("generator"), c.generator);
  tr.get("gumbel_temperature", c.gumbel_temperature);
  auto fair = tr.child("fairness");
  fair.get("fair_batches", t.fairness.fair_batches);
  fair.get("lambda_f", t.fairness.lambda_f);
  fair.get("penalty_iterations", t.fairness.penalty_iterations);
  fair.finish();
  t.r = t.fairness.fair_batches ? 0.2 : 0.9;
  tr.get("r", t.r);
  tr.finish();
  t.seed = c.seed;
  for (ArchConfig* a : {&c.critic, &c.generator}) {
    if (a->width == 0) a->width = tabular ? 64 : 256;
    if (a->depth < 0) a->depth = tabular ? 7 : 4;
    require(a->width >= 1, "network width must be >= 1");
  }
  require(c.gumbel_temperature > 0.0, "gumbel_temperature must be > 0");

  auto ev = root.child("eval");
  ev.get("w1", c.eval.w1);
  ev.get("coverage", c.eval.coverage);
  ev.get("downstream", c.eval.downstream);
  ev.get("w1_samples", c.eval.w1_samples);
  ev.get("coverage_samples", c.eval.coverage_samples);
  ev.get("coverage_radius", c.eval.coverage_radius);
  ev.get("sample_count", c.eval.sample_count);
  ev.get("alphas", c.eval.alphas);
  ev.finish();
  require(c.eval.w1_samples >= 1 && c.eval.coverage_samples >= 1 && c.eval.sample_count >= 0,
          "eval sample counts must be positive");
  require(c.eval.coverage_radius > 0.0, "eval.coverage_radius must be > 0");
  check_alphas(c.eval.alphas, "eval.alphas");

  auto pr = root.child("probe");
  pr.get("kind", c.probe.kind);
  pr.get("mu2", c.probe.mu2);
  pr.get("r", c.probe.r);
  pr.get("sigma", c.probe.sigma);
  pr.finish();

  auto fg = root.child("fairgen");
  fg.get("alphas", c.fairgen_alphas);
  fg.finish();
  check_alphas(c.fairgen_alphas, "fairgen.alphas");
  for (double a : c.fairgen_alphas) require(a >= 0.5, "fairgen.alphas must lie in [0.5, 1]");

  auto gr = root.child("georepair");
  gr.get("lambdas", c.georepair_lambdas);
  gr.finish();
  check_alphas(c.georepair_lambdas, "georepair.lambdas");
  root.finish();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  const auto& t = train;
  json j;
  j["seed"] = seed;
  j["replicates"] = replicates;
  j["out"] = out;
  j["dataset"] = {{"kind", dataset.kind},       {"mu2", dataset.mu2},       {"samples", dataset.samples},
                  {"strength", dataset.strength}, {"csv", dataset.csv},     {"schema", dataset.schema},
                  {"test_fraction", dataset.test_fraction}};
  j["train"] = {{"loss", objectives::to_string(t.loss)},
                {"penalty", objectives::to_string(t.penalty)},
                {"lambda", t.lambda},
                {"r", t.r},
                {"batch_size", t.batch_size},
                {"iterations", t.iterations},
                {"critic_steps", t.critic_steps},
                {"lr_critic", t.lr_critic},
                {"lr_generator", t.lr_generator},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"checkpoint_stride", t.checkpoint_stride},
                {"interpolated_z", t.interpolated_z},
                {"grad_noise_sigma", t.grad_noise_sigma},
                {"full_grad_variance", t.full_grad_variance},
                {"noise_dim", t.noise_dim},
                {"critic", arch_json(critic)},
                {"generator", arch_json(generator)},
                {"gumbel_temperature", gumbel_temperature},
                {"fairness",
                 {{"fair_batches", t.fairness.fair_batches},
                  {"lambda_f", t.fairness.lambda_f},
                  {"penalty_iterations", t.fairness.penalty_iterations}}}};
  j["eval"] = {{"w1", eval.w1},
               {"coverage", eval.coverage},
               {"downstream", eval.downstream},
               {"w1_samples", eval.w1_samples},
               {"coverage_samples", eval.coverage_samples},
               {"coverage_radius", eval.coverage_radius},
               {"sample_count", eval.sample_count},
               {"alphas", eval.alphas}};
  j["probe"] = {{"kind", probe.kind}, {"mu2", probe.mu2}, {"r", probe.r}, {"sigma", probe.sigma}};
  j["fairgen"] = {{"alphas", fairgen_alphas}};
  j["georepair"] = {{"lambdas", georepair_lambdas}};
  return j;
}

Dataset load_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.kind == "ring8" || cfg.kind == "two1d") {
    Dataset d;
    d.mixture = cfg.kind == "ring8" ? data::ring8() : data::two1d(cfg.mu2);
    Rng rng = Rng::derive(seed, kDataStream);
    d.x = data::sample_mixture(*d.mixture, cfg.samples, rng);
    return d;
  }
  const auto src = raw_source(cfg, seed);
  return encode_split(src.raw, src.schema, cfg.test_fraction, seed);
}

trainer::TrainConfig resolve_train(const ExperimentConfig& cfg, const Dataset& data) {
  trainer::TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  const Index d = data.x.cols();
  t.critic = trainer::default_critic(d, t.loss, cfg.critic.width, cfg.critic.depth);
  t.critic.activations.assign(t.critic.hidden_widths.size(), nets::activation_from_string(cfg.critic.activation));
  t.generator = trainer::default_generator(t.noise_dim, d, cfg.generator.width, cfg.generator.depth);
  t.generator.activations.assign(t.generator.hidden_widths.size(),
                                 nets::activation_from_string(cfg.generator.activation));
  if (data.meta) {
    t.generator.head = nets::Head::Tabular;
    t.generator.tabular =
        nets::TabularHeadSpec{data.meta->continuous_dim, data.meta->discrete_groups, cfg.gumbel_temperature, false};
    const auto& schema = data.meta->schema;
    if (t.fairness.lambda_f > 0.0 || t.fairness.fair_batches) {
      if (!schema.sensitive) throw ConfigError("fairness settings need a sensitive column in the schema");
      t.fairness.sensitive_column = data.meta->positive_column(*schema.sensitive);
      if (t.fairness.lambda_f > 0.0) {
        if (!schema.label) throw ConfigError("the fairness penalty needs a label column in the schema");
        t.fairness.label_column = data.meta->positive_column(*schema.label);
      }
    }
  } else if (t.fairness.fair_batches || t.fairness.lambda_f > 0.0) {
    throw ConfigError("fairness settings need a tabular dataset");
  }
  return t;
}

tempering::GroupedData split_groups(const Matrix& x, const data::TabularMeta& meta) {
  if (!meta.schema.sensitive) throw ConfigError("schema names no sensitive column");
  const auto a = data::binary_column(x, meta, *meta.schema.sensitive);
  std::vector<Index> r0, r1;
  for (std::size_t i = 0; i < a.size(); ++i) (a[i] ? r1 : r0).push_back(static_cast<Index>(i));
  return {data::take_rows(x, r0), data::take_rows(x, r1)};
}

Matrix harden(const Matrix& x, const data::TabularMeta& meta) {
  Matrix out = x;
  for (const auto& c : meta.columns) {
    if (c.kind != data::ColumnKind::Categorical) continue;
    for (Index r = 0; r < x.rows(); ++r) {
      Index best = 0;
      x.row(r).segment(c.offset, c.width).maxCoeff(&best);
      out.row(r).segment(c.offset, c.width).setZero();
      out(r, c.offset + best) = 1.0;
    }
  }
  return out;
}

DownstreamScore downstream(const Matrix& train, const Matrix& test, const data::TabularMeta& meta) {
  const auto& schema = meta.schema;
  if (!schema.label) throw ConfigError("downstream scoring needs a label column");
  const auto y_train = data::binary_column(train, meta, *schema.label);
  const auto y_test = data::binary_column(test, meta, *schema.label);
  std::vector<int> a_test;
  if (schema.sensitive) a_test = data::binary_column(test, meta, *schema.sensitive);
  DownstreamScore s;
  const bool one_class = std::all_of(y_train.begin(), y_train.end(), [&](int v) { return v == y_train.front(); });
  if (one_class) {
    spdlog::warn("downstream training labels hold a single class; using the constant classifier");
    return s;
  }
  const Matrix f_train = data::features_without(train, meta, *schema.label);
  const Matrix f_test = data::features_without(test, meta, *schema.label);
  const auto model = eval::logistic_fit(f_train, y_train);
  s.tau = eval::select_threshold(model.predict(f_train), y_train);
  const auto scores = model.predict(f_test);
  s.auc = eval::auc(scores, y_test);
  if (!a_test.empty()) s.sp = eval::statistical_parity(scores, a_test, s.tau);
  return s;
}

trainer::Evaluator make_evaluator(const ExperimentConfig& cfg, const trainer::TrainConfig& tc, const Dataset& data) {
  const auto ev = cfg.eval;
  if (data.mixture && (ev.w1 || ev.coverage)) {
    const data::MixtureSpec mix = *data.mixture;
    return [ev, mix, tc](const trainer::Models& m, long, Rng& rng) {
      json j = json::object();
      if (ev.w1) {
        const std::vector<double> ones(static_cast<std::size_t>(ev.w1_samples), 1.0);
        const Matrix fake = trainer::generate(tc.generator, m.generator, ones, tc.noise_dim, rng);
        const Matrix real = data::sample_mixture(mix, ev.w1_samples, rng);
        const auto w = eval::w1_distance(fake, real, rng.next());
        j["w1"] = w.value;
        j["log_w1"] = std::log(w.value);
      }
      if (ev.coverage) {
        const std::vector<double> ones(static_cast<std::size_t>(ev.coverage_samples), 1.0);
        const Matrix fake = trainer::generate(tc.generator, m.generator, ones, tc.noise_dim, rng);
        const auto c = eval::mode_coverage(fake, mix.centers, ev.coverage_radius);
        j["coverage"] = c.covered;
        j["coverage_assigned"] = c.assigned;
      }
      return j;
    };
  }
  if (data.meta && data.meta->schema.label && ev.downstream) {
    const Dataset d = data;
    return [d, tc](const trainer::Models& m, long, Rng& rng) {
      const std::vector<double> ones(static_cast<std::size_t>(d.x.rows()), 1.0);
      const Matrix fake = harden(trainer::generate(tc.generator, m.generator, ones, tc.noise_dim, rng), *d.meta);
      return json{{"auc", downstream(fake, d.test, *d.meta).auc}};
    };
  }
  return {};
}

json spec_to_json(const nets::MlpSpec& spec) {
  json acts = json::array();
  for (auto a : spec.activations) acts.push_back(nets::to_string(a));
  json j{{"input_dim", spec.input_dim},     {"hidden_widths", spec.hidden_widths}, {"output_dim", spec.output_dim},
         {"activations", acts},             {"lrelu_slope", spec.lrelu_slope},     {"head", nets::to_string(spec.head)}};
  if (spec.tabular) {
    j["tabular"] = {{"continuous_dim", spec.tabular->continuous_dim},
                    {"discrete_groups", spec.tabular->discrete_groups},
                    {"gumbel_temperature", spec.tabular->gumbel_temperature},
                    {"tanh_continuous", spec.tabular->tanh_continuous}};
  }
  return j;
}

nets::MlpSpec spec_from_json(const json& j) {
  nets::MlpSpec s;
  s.input_dim = j.at("input_dim").get<Index>();
  s.hidden_widths = j.at("hidden_widths").get<std::vector<Index>>();
  s.output_dim = j.at("output_dim").get<Index>();
  for (const auto& a : j.at("activations")) s.activations.push_back(nets::activation_from_string(a.get<std::string>()));
  s.lrelu_slope = j.at("lrelu_slope").get<double>();
  s.head = nets::head_from_string(j.at("head").get<std::string>());
  if (j.contains("tabular")) {
    const auto& t = j.at("tabular");
    s.tabular = nets::TabularHeadSpec{t.at("continuous_dim").get<Index>(),
                                      t.at("discrete_groups").get<std::vector<Index>>(),
                                      t.at("gumbel_temperature").get<double>(), t.at("tanh_continuous").get<bool>()};
  }
  return s;
}

void save_checkpoint(const fs::path& path, const trainer::TrainConfig& cfg, const trainer::Models& models,
                     long iteration) {
  const json j{{"magic", kCheckpointMagic},
               {"iteration", iteration},
               {"critic", params_json(cfg.critic, models.critic)},
               {"generator", params_json(cfg.generator, models.generator)}};
  write_text(path, j.dump() + "\n");
}

trainer::Models load_checkpoint(const fs::path& path, const trainer::TrainConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint '" + path.string() + "'");
  try {
    const json j = json::parse(in);
    if (!j.is_object() || j.value("magic", "") != kCheckpointMagic) {
      throw ConfigError("'" + path.string() + "' is not a " + kCheckpointMagic + " checkpoint");
    }
    return {params_from_json(j.at("critic"), cfg.critic, "critic"),
            params_from_json(j.at("generator"), cfg.generator, "generator")};
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path.string() + "': " + e.what());
  }
}

Matrix sample_alphas(const trainer::TrainConfig& tc, const trainer::Models& models, const std::vector<double>& alphas,
                     Index per_alpha, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, kSampleStream);
  const Index d = tc.generator.output_dim;
  Matrix out(per_alpha * static_cast<Index>(alphas.size()), d + 1);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const std::vector<double> a(static_cast<std::size_t>(per_alpha), alphas[k]);
    const Index off = static_cast<Index>(k) * per_alpha;
    out.block(off, 0, per_alpha, d) = trainer::generate(tc.generator, models.generator, a, tc.noise_dim, rng);
    out.block(off, d, per_alpha, 1).setConstant(alphas[k]);
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<trainer::MetricsRecord>& log) {
  std::string text;
  for (const auto& r : log) text += r.to_json().dump() + "\n";
  write_text(path, text);
}

RunResult run_train(const ExperimentConfig& cfg, const std::optional<fs::path>& dir) {
  RunResult res;
  res.data = load_dataset(cfg.dataset, cfg.seed);
  res.train = resolve_train(cfg, res.data);
  std::optional<tempering::GroupedData> groups;
  if (res.train.fairness.fair_batches) groups = split_groups(res.data.x, *res.data.meta);
  trainer::Trainer t(res.train, res.data.x, groups);
  t.set_evaluator(make_evaluator(cfg, res.train, res.data));

  std::ofstream metrics, timing;
  if (dir) {
    fs::create_directories(*dir);
    ExperimentConfig frozen = cfg;
    frozen.out = dir->string();
    write_text(*dir / "config.json", frozen.to_json().dump(2) + "\n");
    metrics.open(*dir / "metrics.jsonl", std::ios::binary);
    timing.open(*dir / "timing.jsonl", std::ios::binary);
    if (!metrics || !timing) throw ConfigError("cannot write to " + dir->string());
  }
  res.log = t.run([&](const trainer::MetricsRecord& r) {
    if (!dir) return;
    metrics << r.to_json().dump() << "\n" << std::flush;
    timing << json{{"iteration", r.iteration}, {"wall_seconds", r.wall_seconds}}.dump() << "\n";
  });
  res.models = t.models();
  if (dir) {
    save_checkpoint(*dir / "checkpoint.json", res.train, res.models, t.iteration());
    const Index n = cfg.eval.sample_count > 0 ? cfg.eval.sample_count : res.data.x.rows();
    Matrix rows = sample_alphas(res.train, res.models, cfg.eval.alphas, n, cfg.seed);
    if (res.data.meta) rows.leftCols(rows.cols() - 1) = harden(rows.leftCols(rows.cols() - 1), *res.data.meta);
    data::write_csv(*dir / "samples.csv", samples_table(rows, res.data));
    if (res.data.meta && res.data.meta->schema.label && cfg.eval.downstream && !res.log.empty()) {
      const double s_train = downstream(res.data.x, res.data.test, *res.data.meta).auc;
      std::vector<double> s_t;
      for (const auto& r : res.log) s_t.push_back(r.eval.value("auc", 0.5));
      json summary{{"auc_real", s_train}};
      if (s_t.size() >= 2) summary["s_t"] = eval::s_t_score(s_train, s_t);
      write_text(*dir / "summary.json", summary.dump(2) + "\n");
    }
  }
  return res;
}

std::vector<RunResult> run_replicates(const ExperimentConfig& cfg) {
  const int n = cfg.replicates;
  std::vector<RunResult> results(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const unsigned workers = std::max(1u, std::min<unsigned>(static_cast<unsigned>(n), std::thread::hardware_concurrency()));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      const fs::path dir = n == 1 ? fs::path(cfg.out) : fs::path(cfg.out) / ("rep-" + std::to_string(i));
      try {
        results[static_cast<std::size_t>(i)] = run_train(replicate_config(cfg, i, dir), dir);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<ProbeArm> run_probe(const ExperimentConfig& cfg, const std::optional<fs::path>& dir) {
  const auto& p = cfg.probe;
  std::vector<ProbeArm> arms;
  auto probe_arm = [&](double mu2, double r) {
    DatasetConfig dc = cfg.dataset;
    dc.kind = "two1d";
    dc.mu2 = mu2;
    ExperimentConfig c = cfg;
    c.dataset = dc;
    const Dataset d = load_dataset(dc, cfg.seed);
    trainer::TrainConfig tc = resolve_train(c, d);
    tc.r = r;
    const double sigma = d.mixture->sigma;
    const trainer::Sampler left = [mu2, sigma](Index n, Rng& rng) { return sample_left_mode(n, mu2, sigma, rng); };
    return trainer::probe_fixed_generator(tc, d.x, left);
  };
  auto fmt = [](const char* key, double v) { return std::string(key) + "=" + format_double(v); };

  if (p.kind == "fixed-generator") {
    require(!p.mu2.empty(), "probe.mu2 must not be empty");
    for (double mu2 : p.mu2) arms.push_back({fmt("mu2", mu2), probe_arm(mu2, cfg.train.r)});
  } else if (p.kind == "variance-reduction") {
    require(!p.mu2.empty() && !p.r.empty(), "probe.mu2 and probe.r must not be empty");
    for (double mu2 : p.mu2) {
      for (double r : p.r) arms.push_back({fmt("mu2", mu2) + "_" + fmt("r", r), probe_arm(mu2, r)});
    }
  } else if (p.kind == "noise-injection") {
    require(!p.sigma.empty(), "probe.sigma must not be empty");
    for (double s : p.sigma) {
      ExperimentConfig c = cfg;
      c.train.grad_noise_sigma = s;
      arms.push_back({fmt("sigma", s), run_train(c, std::nullopt).log});
    }
  } else {
    throw ConfigError("unknown probe kind '" + p.kind + "'");
  }
  if (dir) {
    fs::create_directories(*dir);
    write_text(*dir / "config.json", cfg.to_json().dump(2) + "\n");
    for (const auto& a : arms) write_jsonl(*dir / ("metrics_" + a.name + ".jsonl"), a.log);
  }
  return arms;
}

FairgenResult run_fairgen(const ExperimentConfig& cfg, const std::optional<fs::path>& dir,
                          const std::optional<fs::path>& checkpoint) {
  if (!cfg.dataset.tabular()) throw ConfigError("fairgen needs a tabular dataset");
  ExperimentConfig c = cfg;
  c.train.fairness.fair_batches = true;
  c.eval.alphas = cfg.fairgen_alphas;
  Dataset data = load_dataset(c.dataset, c.seed);
  const auto& schema = data.meta->schema;
  if (!schema.sensitive || !schema.label) throw ConfigError("fairgen needs sensitive and label columns in the schema");

  trainer::Models models;
  trainer::TrainConfig tc;
  if (checkpoint) {
    tc = resolve_train(c, data);
    models = load_checkpoint(*checkpoint, tc);
  } else {
    auto run = run_train(c, dir);
    tc = run.train;
    models = run.models;
  }

  FairgenResult res;
  res.real = downstream(data.x, data.test, *data.meta);
  std::vector<eval::ParetoPoint> points;
  const Index n = data.x.rows();
  for (double a : cfg.fairgen_alphas) {
    const Matrix rows = sample_alphas(tc, models, {a}, n, c.seed + 1);
    const Matrix synth = harden(rows.leftCols(rows.cols() - 1), *data.meta);
    FairgenRow row{a, downstream(synth, data.test, *data.meta)};
    res.rows.push_back(row);
    points.push_back({row.score.auc, row.score.sp, "alpha=" + format_double(a)});
    if (dir) {
      Matrix with_alpha(n, synth.cols() + 1);
      with_alpha << synth, Matrix::Constant(n, 1, a);
      data::write_csv(*dir / ("synthetic_alpha_" + format_double(a) + ".csv"), samples_table(with_alpha, data));
    }
  }
  res.frontier = eval::pareto_frontier(points);
  if (dir) {
    fs::create_directories(*dir);
    json table = json::array();
    for (const auto& r : res.rows) table.push_back({{"alpha", r.alpha}, {"auc", r.score.auc}, {"sp", r.score.sp}, {"tau", r.score.tau}});
    json frontier = json::array();
    for (const auto& p : res.frontier) frontier.push_back({{"tag", p.tag}, {"auc", p.auc}, {"sp", p.sp}});
    write_text(*dir / "fairgen.json",
               json{{"rows", table}, {"real", {{"auc", res.real.auc}, {"sp", res.real.sp}}}, {"frontier", frontier}}.dump(2) +
                   "\n");
  }
  return res;
}

std::vector<GeorepairRow> run_georepair(const ExperimentConfig& cfg, const std::optional<fs::path>& dir) {
  if (!cfg.dataset.tabular()) throw ConfigError("georepair needs a tabular dataset");
  const auto src = raw_source(cfg.dataset, cfg.seed);
  src.schema.validate();
  if (!src.schema.sensitive) throw ConfigError("georepair needs a sensitive column in the schema");
  const auto groups_table = data::encode(src.raw, src.schema);
  const auto groups = data::binary_column(groups_table.x, groups_table.meta, *src.schema.sensitive);

  std::vector<Index> continuous;
  for (const auto& col : src.schema.columns) {
    if (col.kind == data::ColumnKind::Continuous) continuous.push_back(src.raw.column_index(col.name));
  }
  if (continuous.empty()) spdlog::warn("no continuous columns to repair; outputs equal the input");
  if (dir) fs::create_directories(*dir);

  std::vector<GeorepairRow> out;
  for (double lambda : cfg.georepair_lambdas) {
    data::RawTable repaired = src.raw;
    for (Index c : continuous) {
      const auto cu = static_cast<std::size_t>(c);
      std::vector<double> col;
      for (const auto& row : src.raw.rows) col.push_back(std::stod(row[cu]));
      const auto fixed = eval::geo_repair(col, groups, lambda);
      for (std::size_t r = 0; r < col.size(); ++r) {
        if (fixed[r] != col[r]) repaired.rows[r][cu] = format_double(fixed[r]);
      }
    }
    if (dir) data::write_csv(*dir / ("repaired_lambda_" + format_double(lambda) + ".csv"), repaired);
    if (src.schema.label) {
      const Dataset d = encode_split(repaired, src.schema, cfg.dataset.test_fraction, cfg.seed);
      out.push_back({lambda, downstream(d.x, d.test, *d.meta)});
    } else {
      out.push_back({lambda, {}});
    }
  }
  if (dir) {
    json table = json::array();
    for (const auto& r : out) table.push_back({{"lambda", r.lambda}, {"auc", r.score.auc}, {"sp", r.score.sp}});
    write_text(*dir / "georepair.json", table.dump(2) + "\n");
  }
  return out;
}

Matrix read_numeric_csv(const fs::path& path) {
  const auto t = data::read_csv(path.string());
  std::size_t cols = t.header.size();
  if (cols > 0 && t.header.back() == "alpha") --cols;
  if (cols == 0 || t.rows.empty()) throw ConfigError("'" + path.string() + "' holds no numeric data");
  Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& s = t.rows[r][c];
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("'" + path.string() + "' row " + std::to_string(r + 1) + ", column '" + t.header[c] +
                          "': not a number");
      }
      m(static_cast<Index>(r), static_cast<Index>(c)) = v;
    }
  }
  return m;
}

}  // namespace ptgan::experiment
