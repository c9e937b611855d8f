// Command-line driver: train, probe, fairgen, georepair, eval-w1, downstream.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ptgan/error.hpp"
#include "ptgan/evalmetrics.hpp"
#include "ptgan/experiment.hpp"

using namespace ptgan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::vector<double> alphas;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_replicates, bool with_alphas) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_option("--seed", f.seed, "base seed (overrides the config)");
  if (with_replicates) cmd->add_option("--replicates", f.replicates, "replicate count; replicate i uses seed + i");
  if (with_alphas) cmd->add_option("--alphas", f.alphas, "temperatures, comma separated")->delimiter(',');
}

experiment::ExperimentConfig load_config(const CommonFlags& f) {
  auto cfg = experiment::ExperimentConfig::load(f.config);
  if (!f.out.empty()) cfg.out = f.out;
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.train.seed = *f.seed;
  }
  if (f.replicates) {
    if (*f.replicates < 1) throw ConfigError("--replicates must be >= 1");
    cfg.replicates = *f.replicates;
  }
  return cfg;
}

void check_alpha_flag(const std::vector<double>& alphas, double lo) {
  for (double a : alphas) {
    if (!(a >= lo && a <= 1.0)) throw ConfigError("--alphas values must lie in [" + std::to_string(lo) + ", 1]");
  }
}

void print_json(const json& j) { std::cout << j.dump(2) << std::endl; }

int run(int argc, char** argv) {
  CLI::App app{"Parallelly tempered GAN experiments"};
  app.require_subcommand(1);

  CommonFlags train_f, probe_f, fair_f, repair_f;
  std::string probe_kind, checkpoint;
  std::vector<double> lambdas;

  auto* train = app.add_subcommand("train", "train one or more replicates");
  add_common(train, train_f, true, true);

  auto* probe = app.add_subcommand("probe", "gradient-variance probes");
  add_common(probe, probe_f, false, false);
  probe->add_option("--kind", probe_kind, "fixed-generator | variance-reduction | noise-injection");

  auto* fairgen = app.add_subcommand("fairgen", "fair tabular generation over an alpha grid");
  add_common(fairgen, fair_f, false, true);
  fairgen->add_option("--checkpoint", checkpoint, "use a trained checkpoint instead of training")
      ->check(CLI::ExistingFile);

  auto* georepair = app.add_subcommand("georepair", "geometric repair baseline");
  add_common(georepair, repair_f, false, false);
  georepair->add_option("--lambdas", lambdas, "repair amounts, comma separated")->delimiter(',');

  std::string w1_a, w1_b;
  std::uint64_t w1_seed = 0;
  auto* eval_w1 = app.add_subcommand("eval-w1", "1-Wasserstein distance between two numeric CSVs");
  eval_w1->add_option("a", w1_a)->required()->check(CLI::ExistingFile);
  eval_w1->add_option("b", w1_b)->required()->check(CLI::ExistingFile);
  eval_w1->add_option("--seed", w1_seed, "subsampling seed");

  std::string ds_train, ds_test, ds_schema;
  auto* down = app.add_subcommand("downstream", "logistic-regression AUC and statistical parity");
  down->add_option("--train", ds_train, "training CSV (real or synthetic)")->required()->check(CLI::ExistingFile);
  down->add_option("--test", ds_test, "held-out real CSV")->required()->check(CLI::ExistingFile);
  down->add_option("--schema", ds_schema, "schema JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*train) {
    auto cfg = load_config(train_f);
    if (!train_f.alphas.empty()) {
      check_alpha_flag(train_f.alphas, 0.0);
      cfg.eval.alphas = train_f.alphas;
    }
    const auto runs = experiment::run_replicates(cfg);
    json summary = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      json row{{"replicate", i}, {"seed", cfg.seed + i}, {"records", runs[i].log.size()}};
      if (!runs[i].log.empty()) row["final"] = runs[i].log.back().to_json();
      summary.push_back(row);
    }
    print_json(summary);
  } else if (*probe) {
    auto cfg = load_config(probe_f);
    if (!probe_kind.empty()) cfg.probe.kind = probe_kind;
    const auto arms = experiment::run_probe(cfg, fs::path(cfg.out));
    json summary = json::array();
    for (const auto& a : arms) {
      json row{{"arm", a.name}, {"records", a.log.size()}};
      if (!a.log.empty()) row["final"] = a.log.back().to_json();
      summary.push_back(row);
    }
    print_json(summary);
  } else if (*fairgen) {
    auto cfg = load_config(fair_f);
    if (!fair_f.alphas.empty()) {
      check_alpha_flag(fair_f.alphas, 0.5);
      cfg.fairgen_alphas = fair_f.alphas;
    }
    std::optional<fs::path> ckpt;
    if (!checkpoint.empty()) ckpt = checkpoint;
    const auto res = experiment::run_fairgen(cfg, fs::path(cfg.out), ckpt);
    json rows = json::array();
    for (const auto& r : res.rows) rows.push_back({{"alpha", r.alpha}, {"auc", r.score.auc}, {"sp", r.score.sp}});
    print_json({{"rows", rows}, {"real", {{"auc", res.real.auc}, {"sp", res.real.sp}}}});
  } else if (*georepair) {
    auto cfg = load_config(repair_f);
    if (!lambdas.empty()) {
      check_alpha_flag(lambdas, 0.0);
      cfg.georepair_lambdas = lambdas;
    }
    const auto rows = experiment::run_georepair(cfg, fs::path(cfg.out));
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"lambda", r.lambda}, {"auc", r.score.auc}, {"sp", r.score.sp}});
    print_json(out);
  } else if (*eval_w1) {
    const auto a = experiment::read_numeric_csv(w1_a);
    const auto b = experiment::read_numeric_csv(w1_b);
    if (a.cols() != b.cols()) throw ConfigError("the two CSVs have different column counts");
    const auto w = eval::w1_distance(a, b, w1_seed);
    print_json({{"w1", w.value}, {"method", eval::to_string(w.method)}});
  } else if (*down) {
    std::ifstream in(ds_schema);
    json sj;
    try {
      sj = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("schema file '" + ds_schema + "': " + e.what());
    }
    const auto schema = data::TabularSchema::from_json(sj);
    if (!schema.label) throw ConfigError("downstream needs a label column in the schema");
    const auto train_t = data::load_tabular(ds_train, schema);
    const ad::Matrix test = data::transform(data::read_csv(ds_test), train_t.meta);
    const auto s = experiment::downstream(train_t.x, test, train_t.meta);
    print_json({{"auc", s.auc}, {"sp", s.sp}, {"tau", s.tau}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("ptgan"));
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    spdlog::error("numerical abort at iteration {}: {}", e.iteration(), e.what());
    return 3;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
