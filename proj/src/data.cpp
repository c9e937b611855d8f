#include "ptgan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ptgan/error.hpp"

namespace ptgan::data {

void MixtureSpec::validate() const {
  if (centers.rows() < 1 || centers.cols() < 1) throw ConfigError("mixture needs at least one center");
  if (!(sigma >= 0.0)) throw ConfigError("mixture sigma must be >= 0");
  if (!weights.empty()) {
    if (static_cast<Index>(weights.size()) != centers.rows()) {
      throw ConfigError("mixture weights count does not match centers");
    }
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("mixture weights must be >= 0");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
  }
}

std::vector<double> MixtureSpec::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(static_cast<std::size_t>(centers.rows()),
                             1.0 / static_cast<double>(centers.rows()));
}

MixtureSpec ring8() {
  MixtureSpec s;
  s.centers.resize(8, 2);
  for (int k = 0; k < 8; ++k) {
    const double t = 2.0 * M_PI * k / 8.0;
    s.centers(k, 0) = 1.5 * std::cos(t);
    s.centers(k, 1) = 1.5 * std::sin(t);
  }
  s.sigma = 0.1;
  return s;
}

MixtureSpec two1d(double mu2) {
  MixtureSpec s;
  s.centers.resize(2, 1);
  s.centers << -mu2, mu2;
  s.sigma = 0.1;
  return s;
}

Matrix sample_mixture(const MixtureSpec& spec, Index n, Rng& rng, std::vector<int>* components) {
  spec.validate();
  const auto w = spec.resolved_weights();
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  Matrix out(n, spec.centers.cols());
  if (components) components->resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * cdf.back();
    auto k = static_cast<Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, spec.centers.rows() - 1);
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = spec.centers(k, j) + spec.sigma * rng.normal();
    if (components) (*components)[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema

void TabularSchema::validate() const {
  if (columns.empty()) throw ConfigError("schema has no columns");
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema column with empty name");
    if (!names.insert(c.name).second) throw ConfigError("schema column '" + c.name + "' declared twice");
    if (c.kind == ColumnKind::Categorical) {
      if (c.levels.empty()) throw ConfigError("categorical column '" + c.name + "' has no levels");
      std::set<std::string> lv(c.levels.begin(), c.levels.end());
      if (lv.size() != c.levels.size()) throw ConfigError("categorical column '" + c.name + "' repeats a level");
      for (const auto& [raw, level] : c.map) {
        if (!lv.count(level)) {
          throw ConfigError("column '" + c.name + "' maps '" + raw + "' to unknown level '" + level + "'");
        }
      }
    } else if (!c.levels.empty() || !c.map.empty()) {
      throw ConfigError("continuous column '" + c.name + "' cannot declare levels");
    }
  }
  for (const auto* role : {&sensitive, &label}) {
    if (!*role) continue;
    if (!names.count(**role)) throw ConfigError("schema names missing column '" + **role + "'");
    const auto& c = column(**role);
    if (c.kind != ColumnKind::Categorical || c.levels.size() != 2) {
      throw ConfigError("column '" + c.name + "' must be categorical with two levels");
    }
  }
  if (sensitive && label && *sensitive == *label) {
    throw ConfigError("sensitive and label columns must differ");
  }
}

const ColumnSpec& TabularSchema::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw ConfigError("schema has no column '" + name + "'");
}

TabularSchema TabularSchema::from_json(const nlohmann::json& j) {
  static const std::set<std::string> top_keys{"columns", "sensitive", "label"};
  static const std::set<std::string> col_keys{"name", "kind", "levels", "map"};
  if (!j.is_object()) throw ConfigError("schema must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!top_keys.count(k)) throw ConfigError("unknown schema key '" + k + "'");
  }
  TabularSchema s;
  try {
    for (const auto& cj : j.at("columns")) {
      for (const auto& [k, v] : cj.items()) {
        if (!col_keys.count(k)) throw ConfigError("unknown schema column key '" + k + "'");
      }
      ColumnSpec c;
      c.name = cj.at("name").get<std::string>();
      const auto kind = cj.at("kind").get<std::string>();
      if (kind == "continuous") c.kind = ColumnKind::Continuous;
      else if (kind == "categorical") c.kind = ColumnKind::Categorical;
      else throw ConfigError("column '" + c.name + "': unknown kind '" + kind + "'");
      if (cj.contains("levels")) c.levels = cj.at("levels").get<std::vector<std::string>>();
      if (cj.contains("map")) c.map = cj.at("map").get<std::map<std::string, std::string>>();
      s.columns.push_back(std::move(c));
    }
    if (j.contains("sensitive")) s.sensitive = j.at("sensitive").get<std::string>();
    if (j.contains("label")) s.label = j.at("label").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json TabularSchema::to_json() const {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json cj{{"name", c.name},
                      {"kind", c.kind == ColumnKind::Continuous ? "continuous" : "categorical"}};
    if (!c.levels.empty()) cj["levels"] = c.levels;
    if (!c.map.empty()) cj["map"] = c.map;
    j["columns"].push_back(cj);
  }
  if (sensitive) j["sensitive"] = *sensitive;
  if (label) j["label"] = *label;
  return j;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string quote_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ConfigError("row " + std::to_string(row) + ", column '" + col + "': '" + s +
                      "' is not a finite number");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

Index level_index(const ColumnSpec& c, const std::string& raw, std::size_t row) {
  std::string level = raw;
  if (!c.map.empty()) {
    auto it = c.map.find(raw);
    if (it == c.map.end()) it = c.map.find("*");
    if (it != c.map.end()) level = it->second;
  }
  const auto pos = std::find(c.levels.begin(), c.levels.end(), level);
  if (pos == c.levels.end()) {
    throw ConfigError("row " + std::to_string(row) + ", column '" + c.name + "': unknown level '" +
                      raw + "'");
  }
  return static_cast<Index>(pos - c.levels.begin());
}

TabularMeta layout(const TabularSchema& schema) {
  TabularMeta m;
  m.schema = schema;
  m.columns.resize(schema.columns.size());
  Index offset = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const auto want = pass == 0 ? ColumnKind::Continuous : ColumnKind::Categorical;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& c = schema.columns[i];
      if (c.kind != want) continue;
      auto& e = m.columns[i];
      e.name = c.name;
      e.kind = c.kind;
      e.offset = offset;
      e.width = c.kind == ColumnKind::Continuous ? 1 : static_cast<Index>(c.levels.size());
      offset += e.width;
      if (c.kind == ColumnKind::Continuous) ++m.continuous_dim;
      else m.discrete_groups.push_back(e.width);
    }
  }
  m.width = offset;
  return m;
}

std::vector<Index> source_columns(const RawTable& raw, const TabularSchema& schema) {
  std::vector<Index> src;
  for (const auto& c : schema.columns) src.push_back(raw.column_index(c.name));
  return src;
}

void check_row_width(const RawTable& raw, std::size_t r) {
  if (raw.rows[r].size() != raw.header.size()) {
    throw ConfigError("row " + std::to_string(r + 1) + ": expected " + std::to_string(raw.header.size()) +
                      " cells, found " + std::to_string(raw.rows[r].size()));
  }
}

}  // namespace

Index RawTable::column_index(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("missing column '" + name + "'");
  return static_cast<Index>(it - header.begin());
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  RawTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + path + "' is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

void write_csv(const std::string& path, const RawTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  auto write_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << quote_cell(cells[i]);
    out << '\n';
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

const EncodedColumn& TabularMeta::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw ConfigError("no encoded column '" + name + "'");
}

Index TabularMeta::positive_column(const std::string& name) const {
  const auto& c = column(name);
  if (c.kind != ColumnKind::Categorical || c.width != 2) {
    throw ConfigError("column '" + name + "' is not a binary categorical column");
  }
  return c.offset + 1;
}

EncodedTable encode(const RawTable& raw, const TabularSchema& schema) {
  schema.validate();
  EncodedTable t;
  t.meta = layout(schema);
  const auto src = source_columns(raw, schema);
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (schema.columns[i].kind != ColumnKind::Continuous) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      check_row_width(raw, r);
      const double v = parse_number(raw.rows[r][static_cast<std::size_t>(src[i])], r + 1, schema.columns[i].name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    t.meta.columns[i].min = raw.rows.empty() ? 0.0 : lo;
    t.meta.columns[i].max = raw.rows.empty() ? 0.0 : hi;
  }
  t.x = transform(raw, t.meta);
  return t;
}

Matrix transform(const RawTable& raw, const TabularMeta& meta) {
  const auto& schema = meta.schema;
  const auto src = source_columns(raw, schema);
  Matrix x = Matrix::Zero(static_cast<Index>(raw.rows.size()), meta.width);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    check_row_width(raw, r);
    const auto ri = static_cast<Index>(r);
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& c = schema.columns[i];
      const auto& e = meta.columns[i];
      const auto& cell = raw.rows[r][static_cast<std::size_t>(src[i])];
      if (c.kind == ColumnKind::Continuous) {
        const double v = parse_number(cell, r + 1, c.name);
        x(ri, e.offset) = e.max > e.min ? 2.0 * (v - e.min) / (e.max - e.min) - 1.0 : 0.0;
      } else {
        x(ri, e.offset + level_index(c, cell, r + 1)) = 1.0;
      }
    }
  }
  return x;
}

EncodedTable load_tabular(const std::string& path, const TabularSchema& schema) {
  return encode(read_csv(path), schema);
}

RawTable inverse_transform(const Matrix& x, const TabularMeta& meta) {
  if (x.cols() != meta.width) {
    throw ShapeError("inverse_transform: matrix has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(meta.width));
  }
  RawTable t;
  for (const auto& c : meta.schema.columns) t.header.push_back(c.name);
  t.rows.resize(static_cast<std::size_t>(x.rows()));
  for (Index r = 0; r < x.rows(); ++r) {
    auto& row = t.rows[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < meta.columns.size(); ++i) {
      const auto& e = meta.columns[i];
      if (e.kind == ColumnKind::Continuous) {
        const double v = e.max > e.min ? (x(r, e.offset) + 1.0) * 0.5 * (e.max - e.min) + e.min : e.min;
        row.push_back(format_number(v));
      } else {
        Index best = 0;
        x.row(r).segment(e.offset, e.width).maxCoeff(&best);
        row.push_back(meta.schema.columns[i].levels[static_cast<std::size_t>(best)]);
      }
    }
  }
  return t;
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double fraction,
                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0,1)");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng = Rng::derive(seed, 0x5b117);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return {std::vector<Index>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k)),
          std::vector<Index>(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end())};
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<int> binary_column(const Matrix& x, const TabularMeta& meta, const std::string& name) {
  const Index pos = meta.positive_column(name);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = x(r, pos) > x(r, pos - 1) ? 1 : 0;
  return out;
}

Matrix features_without(const Matrix& x, const TabularMeta& meta, const std::string& name) {
  const auto& e = meta.column(name);
  Matrix out(x.rows(), x.cols() - e.width);
  out.leftCols(e.offset) = x.leftCols(e.offset);
  out.rightCols(x.cols() - e.offset - e.width) = x.rightCols(x.cols() - e.offset - e.width);
  return out;
}

RawTable planted_discrimination_table(Index n, double strength, std::uint64_t seed) {
  Rng rng(seed);
  RawTable t;
  t.header = {"income", "debt", "tenure", "region", "group", "label"};
  static const char* regions[] = {"north", "south", "east"};
  for (Index i = 0; i < n; ++i) {
    const int a = rng.bernoulli(0.5) ? 1 : 0;
    const double income = rng.normal() - 0.5 * strength * a;
    const double debt = rng.normal();
    const double tenure = rng.uniform(0.0, 10.0);
    const auto region = rng.index(3);
    const double logit = 1.2 * income - 0.8 * debt + 0.1 * (tenure - 5.0) +
                         (region == 0 ? 0.3 : 0.0) + strength * (1.0 - 2.0 * a);
    const int y = rng.bernoulli(1.0 / (1.0 + std::exp(-logit))) ? 1 : 0;
    t.rows.push_back({format_number(income), format_number(debt), format_number(tenure), regions[region],
                      a ? "a1" : "a0", y ? "yes" : "no"});
  }
  return t;
}

TabularSchema planted_discrimination_schema() {
  TabularSchema s;
  s.columns = {{"income", ColumnKind::Continuous, {}, {}},
               {"debt", ColumnKind::Continuous, {}, {}},
               {"tenure", ColumnKind::Continuous, {}, {}},
               {"region", ColumnKind::Categorical, {"north", "south", "east"}, {}},
               {"group", ColumnKind::Categorical, {"a0", "a1"}, {}},
               {"label", ColumnKind::Categorical, {"no", "yes"}, {}}};
  s.sensitive = "group";
  s.label = "label";
  return s;
}

}  // namespace ptgan::data
