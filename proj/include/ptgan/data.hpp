#pragma once

// Synthetic mixtures, tabular CSV ingestion with min-max / one-hot encoding,
// and train/test splitting.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptgan/autodiff.hpp"
#include "ptgan/random.hpp"

namespace ptgan::data {

using ad::Index;
using ad::Matrix;

struct MixtureSpec {
  Matrix centers;               ///< K x d
  double sigma = 0.1;           ///< isotropic component standard deviation
  std::vector<double> weights;  ///< empty means uniform

  void validate() const;
  std::vector<double> resolved_weights() const;
};

/// Eight components on a circle of radius 1.5 at angles 2 pi k / 8, sigma 0.1.
MixtureSpec ring8();
/// Two 1-D components at -mu2 and +mu2, sigma 0.1.
MixtureSpec two1d(double mu2);

/// Pick a component by weight, add N(0, sigma^2 I). When `components` is
/// given it receives the chosen component per row.
Matrix sample_mixture(const MixtureSpec& spec, Index n, Rng& rng,
                      std::vector<int>* components = nullptr);

enum class ColumnKind { Continuous, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<std::string> levels;          ///< categorical only, in encoding order
  std::map<std::string, std::string> map;   ///< raw value -> level; "*" matches anything else
};

/// Declarative description of a CSV. The sensitive and label columns, when
/// named, must be categorical with exactly two levels; the second level is
/// the positive class / group A = 1.
struct TabularSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> sensitive;
  std::optional<std::string> label;

  void validate() const;
  const ColumnSpec& column(const std::string& name) const;

  static TabularSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Header plus string cells.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column_index(const std::string& name) const;
};

RawTable read_csv(const std::string& path);
void write_csv(const std::string& path, const RawTable& table);

/// Where a schema column lives in the encoded matrix. Continuous columns come
/// first in schema order, then one one-hot block per categorical column.
struct EncodedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  Index offset = 0;
  Index width = 1;
  double min = 0.0;
  double max = 0.0;
};

struct TabularMeta {
  TabularSchema schema;
  std::vector<EncodedColumn> columns;  ///< schema order
  Index width = 0;
  Index continuous_dim = 0;
  std::vector<Index> discrete_groups;  ///< one-hot widths in encoded order

  const EncodedColumn& column(const std::string& name) const;
  /// Encoded column holding level 1 of a binary categorical column.
  Index positive_column(const std::string& name) const;
};

struct EncodedTable {
  Matrix x;
  TabularMeta meta;
};

/// Fits min/max on `raw` and encodes it. Continuous values map to [-1, 1];
/// a constant column maps to 0.
EncodedTable encode(const RawTable& raw, const TabularSchema& schema);
/// Encodes with previously fitted metadata (values may leave [-1, 1]).
Matrix transform(const RawTable& raw, const TabularMeta& meta);
/// Reads and encodes a CSV. Errors name the row and column.
EncodedTable load_tabular(const std::string& path, const TabularSchema& schema);

/// Back to raw cells: continuous columns unscaled, categorical blocks by argmax.
RawTable inverse_transform(const Matrix& x, const TabularMeta& meta);

/// Shuffled split of row indices; the first part has round(fraction * n) rows.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double fraction,
                                                                std::uint64_t seed);
Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);

/// Binary label and group vectors read from the encoded matrix.
std::vector<int> binary_column(const Matrix& x, const TabularMeta& meta, const std::string& name);
/// Every encoded column except the named column's block.
Matrix features_without(const Matrix& x, const TabularMeta& meta, const std::string& name);

/// Synthetic credit-style table whose label depends on the sensitive group
/// both directly and through a correlated feature. Columns: income, debt,
/// tenure (continuous), region (3 levels), group (a0/a1), label (no/yes).
RawTable planted_discrimination_table(Index n, double strength, std::uint64_t seed);
TabularSchema planted_discrimination_schema();

}  // namespace ptgan::data
