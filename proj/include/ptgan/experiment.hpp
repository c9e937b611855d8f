#pragma once

// Declarative experiment configuration, dataset resolution, checkpoint I/O and
// the run-directory drivers shared by the command-line tool and the
// acceptance checks.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptgan/data.hpp"
#include "ptgan/evalmetrics.hpp"
#include "ptgan/trainer.hpp"

namespace ptgan::experiment {

using ad::Index;
using ad::Matrix;

struct DatasetConfig {
  std::string kind = "ring8";  ///< ring8 | two1d | planted | csv
  double mu2 = 1.5;            ///< two1d
  Index samples = 10000;       ///< synthetic presets
  double strength = 1.0;       ///< planted
  std::string csv;             ///< csv
  std::string schema;          ///< csv: path to a schema JSON file
  double test_fraction = 0.1;  ///< tabular held-out split

  bool tabular() const { return kind == "planted" || kind == "csv"; }
};

struct ArchConfig {
  Index width = 0;  ///< 0 picks the dataset default
  int depth = -1;   ///< -1 picks the dataset default
  std::string activation = "relu";
};

struct EvalConfig {
  bool w1 = true;
  bool coverage = true;
  bool downstream = true;  ///< tabular data with a label
  Index w1_samples = 512;
  Index coverage_samples = 2000;
  double coverage_radius = 0.4;
  Index sample_count = 1000;  ///< rows per alpha in samples.csv; 0 means training size
  std::vector<double> alphas{1.0};
};

struct ProbeConfig {
  std::string kind = "fixed-generator";  ///< fixed-generator | variance-reduction | noise-injection
  std::vector<double> mu2{1.5, 3.0};
  std::vector<double> r{1.0, 0.99};
  std::vector<double> sigma{0.0, 0.01};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int replicates = 1;
  std::string out = "runs";
  DatasetConfig dataset;
  trainer::TrainConfig train;  ///< network specs are filled by resolve_train
  ArchConfig critic;
  ArchConfig generator;
  double gumbel_temperature = 0.5;
  EvalConfig eval;
  ProbeConfig probe;
  std::vector<double> fairgen_alphas{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
  std::vector<double> georepair_lambdas{0.0, 0.25, 0.5, 0.75, 1.0};

  /// Parses a config tree; unknown keys and bad values throw ConfigError.
  /// Omitted values take defaults that may depend on the dataset kind.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Fully resolved tree; from_json(to_json()) reproduces the config.
  nlohmann::json to_json() const;
};

struct Dataset {
  Matrix x;                                  ///< training rows (encoded for tabular data)
  Matrix test;                               ///< held-out rows, tabular only
  std::optional<data::MixtureSpec> mixture;  ///< synthetic toy presets
  std::optional<data::TabularMeta> meta;     ///< tabular data
};

/// Samples or reads the configured data. Tabular data is split train/test.
Dataset load_dataset(const DatasetConfig& cfg, std::uint64_t seed);

/// Training config with network specs and fairness columns for `data`.
trainer::TrainConfig resolve_train(const ExperimentConfig& cfg, const Dataset& data);

/// Rows split by the sensitive column.
tempering::GroupedData split_groups(const Matrix& x, const data::TabularMeta& meta);

/// Snaps every categorical block to its argmax one-hot row.
Matrix harden(const Matrix& x, const data::TabularMeta& meta);

struct DownstreamScore {
  double auc = 0.5;
  double sp = 0.0;
  double tau = 0.0;
};

/// Logistic regression fitted on `train` (features exclude the label), the
/// threshold chosen for training accuracy, scored on `test`. A single-class
/// training label gives the constant classifier: auc 0.5, sp 0.
DownstreamScore downstream(const Matrix& train, const Matrix& test, const data::TabularMeta& meta);

/// Checkpoint evaluator: W1 and mode coverage for toy mixtures, downstream
/// AUC for labelled tabular data. Null when nothing applies.
trainer::Evaluator make_evaluator(const ExperimentConfig& cfg, const trainer::TrainConfig& tc, const Dataset& data);

inline constexpr const char* kCheckpointMagic = "PTGAN-CKPT-1";

nlohmann::json spec_to_json(const nets::MlpSpec& spec);
nets::MlpSpec spec_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const trainer::TrainConfig& cfg,
                     const trainer::Models& models, long iteration);
/// Throws ConfigError on a bad magic string or on shapes that disagree with `cfg`.
trainer::Models load_checkpoint(const std::filesystem::path& path, const trainer::TrainConfig& cfg);

struct RunResult {
  std::vector<trainer::MetricsRecord> log;
  trainer::Models models;
  trainer::TrainConfig train;
  Dataset data;
};

/// One training run. With a directory it writes config.json, metrics.jsonl,
/// timing.jsonl, checkpoint.json and samples.csv there.
RunResult run_train(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& dir);

/// Replicate i runs with seed + i, in out/ when there is one replicate and in
/// out/rep-i otherwise. Replicates run on worker threads.
std::vector<RunResult> run_replicates(const ExperimentConfig& cfg);

/// Generated rows at each alpha with alpha as a trailing column.
Matrix sample_alphas(const trainer::TrainConfig& tc, const trainer::Models& models,
                     const std::vector<double>& alphas, Index per_alpha, std::uint64_t seed);

struct ProbeArm {
  std::string name;
  std::vector<trainer::MetricsRecord> log;
};

/// The configured probe; writes one JSONL per arm when `dir` is given.
std::vector<ProbeArm> run_probe(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& dir);

struct FairgenRow {
  double alpha = 1.0;
  DownstreamScore score;
};

struct FairgenResult {
  std::vector<FairgenRow> rows;
  DownstreamScore real;
  std::vector<eval::ParetoPoint> frontier;
};

/// Trains with fair batches (or loads `checkpoint`), generates a training-size
/// table per alpha and scores each against the real test split.
FairgenResult run_fairgen(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& dir,
                          const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

struct GeorepairRow {
  double lambda = 0.0;
  DownstreamScore score;
};

/// Repairs every continuous column of the raw table per lambda, writes the
/// repaired CSV, then encodes, splits and scores downstream.
std::vector<GeorepairRow> run_georepair(const ExperimentConfig& cfg,
                                        const std::optional<std::filesystem::path>& dir);

/// Reads a numeric CSV, dropping a trailing "alpha" column when present.
Matrix read_numeric_csv(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<trainer::MetricsRecord>& log);

}  // namespace ptgan::experiment
