#pragma once

// Long-format choice data: CSV ingestion, validation, covariate encoding and
// the chosen-vs-other difference blocks used by the likelihood.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wtplogit/error.hpp"

namespace wtplogit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

// Splits one CSV record; handles quoted fields with "" escapes. Returns false
// when the record continues on the next physical line (open quote).
inline bool split_record(const std::string& line, std::vector<std::string>& fields,
                         std::string& pending, bool& in_quotes) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          pending.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        pending.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.emplace_back(trim(pending));
      pending.clear();
    } else if (c != '\r') {
      pending.push_back(c);
    }
  }
  if (in_quotes) {
    pending.push_back('\n');
    return false;
  }
  fields.emplace_back(trim(pending));
  pending.clear();
  return true;
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string row_list(const std::vector<std::size_t>& rows) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += std::to_string(rows[i]);
  }
  if (rows.size() > shown) out += ", ... (" + std::to_string(rows.size()) + " rows)";
  return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::vector<std::string> fields;
  std::string pending;
  bool in_quotes = false;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    }
    if (!in_quotes && fields.empty() && detail::trim(line).empty()) continue;
    if (!detail::split_record(line, fields, pending, in_quotes)) continue;
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw SchemaError("CSV record " + std::to_string(table.rows.size() + 1) + " has " +
                          std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    fields.clear();
  }
  if (in_quotes) throw SchemaError("CSV input ends inside a quoted field");
  if (first) throw SchemaError("CSV input has no header row");
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open data file '" + path + "'");
  return read_csv(in);
}

/// Maps column roles onto CSV header names. `levels` declares categorical
/// columns; an empty level list means "categorical, lexicographic order".
struct ColumnSchema {
  std::string outcome;  // empty for prediction inputs without observed choices
  std::string obs_id;
  std::string panel_id;
  std::string weights;
  std::string cluster_id;
  std::map<std::string, std::vector<std::string>> levels;
};

struct Column {
  std::string name;
  bool categorical = false;
  std::vector<std::string> raw;
  std::vector<double> values;       // numeric columns only
  std::vector<std::string> levels;  // categorical columns only
  std::vector<int> codes;           // categorical columns only; -1 for missing
};

/// Validated long-format choice observations. Rows of one observation are
/// contiguous; observation sizes may differ.
struct LongChoiceData {
  CsvTable table;                      // original cells, for echoing
  std::vector<int> outcome;            // per row; empty when no outcome column
  std::vector<std::size_t> obs_start;  // N + 1 row offsets
  std::vector<std::string> obs_labels;
  std::vector<int> panel_of_obs;  // empty when no panel column
  std::vector<std::string> panel_labels;
  std::vector<double> obs_weight;  // empty when unweighted
  std::vector<int> cluster_of_obs;  // empty when no cluster column
  std::vector<std::string> cluster_labels;
  std::vector<Column> covariates;
  ColumnSchema schema;

  std::size_t num_rows() const { return obs_start.empty() ? 0 : obs_start.back(); }
  std::size_t num_obs() const { return obs_labels.size(); }
  std::size_t num_alts(std::size_t n) const { return obs_start[n + 1] - obs_start[n]; }
  bool has_outcome() const { return !outcome.empty(); }
  bool has_panel() const { return !panel_of_obs.empty(); }
  bool has_weights() const { return !obs_weight.empty(); }
  bool has_clusters() const { return !cluster_of_obs.empty(); }

  const Column* find(std::string_view name) const {
    for (const auto& c : covariates)
      if (c.name == name) return &c;
    return nullptr;
  }

  const Column& column(std::string_view name) const {
    if (const Column* c = find(name)) return *c;
    throw SchemaError("unknown column '" + std::string(name) + "'");
  }

  /// Within-observation position of the chosen row.
  std::size_t chosen_position(std::size_t n) const {
    for (std::size_t r = obs_start[n]; r < obs_start[n + 1]; ++r)
      if (outcome[r] == 1) return r - obs_start[n];
    return 0;
  }
};

namespace detail {

inline std::size_t require_column(const CsvTable& t, const std::string& name,
                                  std::string_view role) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end())
    throw SchemaError("column '" + name + "' (" + std::string(role) + ") not found in data");
  return static_cast<std::size_t>(it - t.header.begin());
}

inline void check_no_missing(const CsvTable& t, std::size_t col) {
  std::vector<std::size_t> bad;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (is_missing(t.rows[r][col])) bad.push_back(r + 1);
  if (!bad.empty())
    throw ValidationError("missing values in column '" + t.header[col] +
                          "' at data rows " + row_list(bad));
}

// Maps per-row labels to per-observation indices, requiring constancy
// within an observation.
inline std::vector<int> group_by_obs(const CsvTable& t, std::size_t col,
                                     const std::vector<std::size_t>& obs_start,
                                     const std::vector<std::string>& obs_labels,
                                     std::vector<std::string>& labels, std::string_view role) {
  std::unordered_map<std::string, int> index;
  std::vector<int> out(obs_labels.size());
  for (std::size_t n = 0; n + 1 < obs_start.size(); ++n) {
    const std::string& label = t.rows[obs_start[n]][col];
    for (std::size_t r = obs_start[n] + 1; r < obs_start[n + 1]; ++r) {
      if (t.rows[r][col] != label)
        throw ValidationError(std::string(role) + " differs within observation '" +
                              obs_labels[n] + "'");
    }
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(label);
    out[n] = it->second;
  }
  return out;
}

inline Column make_column(const CsvTable& t, std::size_t col,
                          const std::map<std::string, std::vector<std::string>>& declared) {
  Column c;
  c.name = t.header[col];
  c.raw.reserve(t.rows.size());
  for (const auto& row : t.rows) c.raw.push_back(row[col]);

  auto decl = declared.find(c.name);
  bool numeric = decl == declared.end();
  if (numeric) {
    c.values.reserve(c.raw.size());
    for (const auto& s : c.raw) {
      if (is_missing(s)) {
        c.values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      auto v = parse_double(s);
      if (!v) {
        numeric = false;
        break;
      }
      c.values.push_back(*v);
    }
  }
  if (numeric) return c;

  c.categorical = true;
  c.values.clear();
  if (decl != declared.end() && !decl->second.empty()) {
    c.levels = decl->second;
  } else {
    std::set<std::string> seen;
    for (const auto& s : c.raw)
      if (!is_missing(s)) seen.insert(s);
    c.levels.assign(seen.begin(), seen.end());  // byte-wise lexicographic
  }
  std::unordered_map<std::string, int> code;
  for (std::size_t i = 0; i < c.levels.size(); ++i) code.emplace(c.levels[i], static_cast<int>(i));
  c.codes.reserve(c.raw.size());
  for (std::size_t r = 0; r < c.raw.size(); ++r) {
    if (is_missing(c.raw[r])) {
      c.codes.push_back(-1);
      continue;
    }
    auto it = code.find(c.raw[r]);
    if (it == code.end())
      throw ValidationError("value '" + c.raw[r] + "' of column '" + c.name +
                            "' is not among its declared levels");
    c.codes.push_back(it->second);
  }
  return c;
}

}  // namespace detail

/// Validates a parsed table against a schema.
inline LongChoiceData from_table(CsvTable table, const ColumnSchema& schema) {
  using namespace detail;
  if (schema.obs_id.empty()) throw SchemaError("schema must name the observation id column");
  LongChoiceData data;
  data.schema = schema;
  const CsvTable& t = table;
  if (t.rows.empty()) throw ValidationError("data has no rows");

  const std::size_t obs_col = require_column(t, schema.obs_id, "obs id");
  check_no_missing(t, obs_col);
  std::optional<std::size_t> outcome_col, panel_col, weight_col, cluster_col;
  if (!schema.outcome.empty()) outcome_col = require_column(t, schema.outcome, "outcome");
  if (!schema.panel_id.empty()) panel_col = require_column(t, schema.panel_id, "panel id");
  if (!schema.weights.empty()) weight_col = require_column(t, schema.weights, "weights");
  if (!schema.cluster_id.empty()) cluster_col = require_column(t, schema.cluster_id, "cluster id");
  for (auto col : {outcome_col, panel_col, weight_col, cluster_col})
    if (col) check_no_missing(t, *col);

  // Observation boundaries; each obs_id must occupy one contiguous block.
  std::set<std::string> finished;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& id = t.rows[r][obs_col];
    if (r == 0 || id != t.rows[r - 1][obs_col]) {
      if (finished.count(id))
        throw ValidationError("rows of observation '" + id + "' are not contiguous");
      finished.insert(id);
      data.obs_start.push_back(r);
      data.obs_labels.push_back(id);
    }
  }
  data.obs_start.push_back(t.rows.size());

  if (outcome_col) {
    data.outcome.resize(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto v = parse_double(t.rows[r][*outcome_col]);
      if (!v || (*v != 0.0 && *v != 1.0))
        throw ValidationError("outcome must be 0 or 1; got '" + t.rows[r][*outcome_col] +
                              "' at data row " + std::to_string(r + 1));
      data.outcome[r] = static_cast<int>(*v);
    }
    for (std::size_t n = 0; n < data.num_obs(); ++n) {
      int chosen = 0;
      for (std::size_t r = data.obs_start[n]; r < data.obs_start[n + 1]; ++r) chosen += data.outcome[r];
      if (chosen != 1)
        throw ValidationError("observation '" + data.obs_labels[n] + "' has " +
                              std::to_string(chosen) + " chosen alternatives; exactly one required");
    }
  }

  if (panel_col)
    data.panel_of_obs =
        group_by_obs(t, *panel_col, data.obs_start, data.obs_labels, data.panel_labels, "panel id");
  if (cluster_col)
    data.cluster_of_obs = group_by_obs(t, *cluster_col, data.obs_start, data.obs_labels,
                                       data.cluster_labels, "cluster id");
  if (weight_col) {
    data.obs_weight.resize(data.num_obs());
    for (std::size_t n = 0; n < data.num_obs(); ++n) {
      auto w = parse_double(t.rows[data.obs_start[n]][*weight_col]);
      if (!w || !(*w > 0.0) || !std::isfinite(*w))
        throw ValidationError("weights must be strictly positive; observation '" +
                              data.obs_labels[n] + "' has '" +
                              t.rows[data.obs_start[n]][*weight_col] + "'");
      for (std::size_t r = data.obs_start[n] + 1; r < data.obs_start[n + 1]; ++r)
        if (parse_double(t.rows[r][*weight_col]) != w)
          throw ValidationError("weight differs within observation '" + data.obs_labels[n] + "'");
      data.obs_weight[n] = *w;
    }
  }

  std::set<std::string> roles{schema.outcome, schema.obs_id, schema.panel_id, schema.weights,
                              schema.cluster_id};
  for (const auto& [name, lv] : schema.levels)
    require_column(t, name, "categorical declaration");
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (roles.count(t.header[c])) continue;
    data.covariates.push_back(make_column(t, c, schema.levels));
  }
  data.table = std::move(table);
  return data;
}

inline LongChoiceData load_csv(const std::string& path, const ColumnSchema& schema) {
  return from_table(read_csv_file(path), schema);
}

// ---------------------------------------------------------------------------
// Encoding

/// One factor of an encoded column: a numeric source (level < 0) or the
/// indicator of one level of a categorical source.
struct EncodedFactor {
  std::string source;
  int level = -1;
};

struct EncodedColumn {
  std::string name;
  std::vector<EncodedFactor> factors;  // one for main effects, two for interactions
};

/// How terms become design columns. Kept with a fitted model so new data is
/// encoded against the training levels.
struct Encoding {
  std::vector<std::string> terms;
  std::vector<EncodedColumn> columns;
  std::optional<std::string> scale_par;
  std::map<std::string, std::vector<std::string>> levels;  // categorical sources only
  std::map<std::string, std::vector<std::size_t>> term_columns;

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }

  /// Columns addressed by a term name or by an encoded column name.
  std::vector<std::size_t> resolve(const std::string& key) const {
    if (auto it = term_columns.find(key); it != term_columns.end()) return it->second;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == key) return {i};
    return {};
  }
};

/// Numeric design for one dataset. X_diff / p_diff stack, observation by
/// observation, the rows x_nj - x_nc (p_nj - p_nc) for every non-chosen j.
struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd p;  // scale column; size 0 when no scale variable
  std::vector<std::size_t> obs_start;
  std::vector<std::size_t> chosen_row;  // absolute row index; empty without outcomes
  Eigen::MatrixXd X_diff;
  Eigen::VectorXd p_diff;
  std::vector<std::size_t> diff_start;  // N + 1 offsets into X_diff rows
  std::vector<int> panel_of_obs;
  int num_panels = 0;
  std::vector<std::string> column_names;

  std::size_t num_obs() const { return obs_start.empty() ? 0 : obs_start.size() - 1; }
  std::size_t num_rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t num_cols() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t num_alts(std::size_t n) const { return obs_start[n + 1] - obs_start[n]; }
  bool has_scale() const { return p.size() > 0; }
  bool has_outcome() const { return !chosen_row.empty(); }
  bool has_differences() const { return !diff_start.empty(); }
};

namespace detail {

inline std::vector<std::string> split_interaction(const std::string& term) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = term.find('*', start);
    parts.emplace_back(trim(std::string_view(term).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  for (const auto& p : parts)
    if (p.empty()) throw SchemaError("malformed term '" + term + "'");
  if (parts.size() > 2)
    throw SchemaError("term '" + term + "': only two-way interactions are supported");
  return parts;
}

inline std::vector<EncodedColumn> main_effect_columns(const Column& c) {
  std::vector<EncodedColumn> out;
  if (!c.categorical) {
    out.push_back({c.name, {{c.name, -1}}});
    return out;
  }
  for (std::size_t l = 1; l < c.levels.size(); ++l)
    out.push_back({c.name + c.levels[l], {{c.name, static_cast<int>(l)}}});
  return out;
}

}  // namespace detail

/// Builds the term-to-column encoding. Numeric columns map to one column;
/// categoricals to L-1 dummies against their first level; `a*b` adds a, b and
/// their products. Main effects come first, interactions after.
inline Encoding make_encoding(const LongChoiceData& data, const std::vector<std::string>& pars,
                              const std::optional<std::string>& scale_par = std::nullopt) {
  Encoding enc;
  enc.scale_par = scale_par;
  std::vector<std::string> mains;
  std::vector<std::pair<std::string, std::string>> interactions;
  for (const auto& raw_term : pars) {
    std::string term(detail::trim(raw_term));
    auto parts = detail::split_interaction(term);
    enc.terms.push_back(term);
    for (const auto& part : parts)
      if (std::find(mains.begin(), mains.end(), part) == mains.end()) mains.push_back(part);
    if (parts.size() == 2) interactions.emplace_back(parts[0], parts[1]);
  }
  if (scale_par) {
    const Column* sc = data.find(*scale_par);
    if (!sc) throw SchemaError("unknown scale variable '" + *scale_par + "'");
    if (sc->categorical)
      throw ColumnTypeError("scale variable '" + *scale_par + "' must be numeric");
    if (std::find(mains.begin(), mains.end(), *scale_par) != mains.end())
      throw SpecError("scale variable '" + *scale_par + "' must not also appear in pars");
  }

  std::map<std::string, std::vector<std::size_t>> main_cols;
  for (const auto& name : mains) {
    const Column* c = data.find(name);
    if (!c) throw SchemaError("unknown term '" + name + "'");
    if (c->categorical) {
      if (c->levels.size() < 2)
        throw ValidationError("categorical covariate '" + name + "' has a single level");
      enc.levels[name] = c->levels;
    }
    for (auto& col : detail::main_effect_columns(*c)) {
      main_cols[name].push_back(enc.columns.size());
      enc.columns.push_back(std::move(col));
    }
  }
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> inter_cols;
  for (const auto& [a, b] : interactions) {
    if (inter_cols.count({a, b})) continue;
    auto& idx = inter_cols[{a, b}];
    const auto ca = main_cols.at(a);
    const auto cb = main_cols.at(b);
    for (auto ia : ca) {
      for (auto ib : cb) {
        EncodedColumn col;
        col.name = enc.columns[ia].name + ":" + enc.columns[ib].name;
        col.factors = {enc.columns[ia].factors[0], enc.columns[ib].factors[0]};
        idx.push_back(enc.columns.size());
        enc.columns.push_back(std::move(col));
      }
    }
  }
  for (const auto& term : enc.terms) {
    auto parts = detail::split_interaction(term);
    if (parts.size() == 1) {
      enc.term_columns[term] = main_cols.at(parts[0]);
    } else {
      auto cols = main_cols.at(parts[0]);
      for (auto i : main_cols.at(parts[1])) cols.push_back(i);
      for (auto i : inter_cols.at({parts[0], parts[1]})) cols.push_back(i);
      enc.term_columns[term] = cols;
    }
  }
  for (const auto& name : mains) enc.term_columns.try_emplace(name, main_cols.at(name));
  return enc;
}

/// Fills X_diff/p_diff from X, p and the chosen rows. Idempotent.
inline DesignMatrix precompute_differences(DesignMatrix dm) {
  if (!dm.has_outcome())
    throw ValidationError("difference blocks need the chosen alternative of every observation");
  const std::size_t N = dm.num_obs();
  dm.diff_start.assign(N + 1, 0);
  for (std::size_t n = 0; n < N; ++n) dm.diff_start[n + 1] = dm.diff_start[n] + dm.num_alts(n) - 1;
  const auto total = static_cast<Eigen::Index>(dm.diff_start[N]);
  dm.X_diff.resize(total, dm.X.cols());
  dm.p_diff.resize(dm.has_scale() ? total : 0);
  for (std::size_t n = 0; n < N; ++n) {
    const auto c = static_cast<Eigen::Index>(dm.chosen_row[n]);
    auto out = static_cast<Eigen::Index>(dm.diff_start[n]);
    for (std::size_t r = dm.obs_start[n]; r < dm.obs_start[n + 1]; ++r) {
      const auto j = static_cast<Eigen::Index>(r);
      if (j == c) continue;
      dm.X_diff.row(out) = dm.X.row(j) - dm.X.row(c);
      if (dm.has_scale()) dm.p_diff(out) = dm.p(j) - dm.p(c);
      ++out;
    }
  }
  return dm;
}

/// Encodes data with a fixed encoding (training or replayed from a model).
inline DesignMatrix apply_encoding(const Encoding& enc, const LongChoiceData& data) {
  DesignMatrix dm;
  const std::size_t rows = data.num_rows();
  dm.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(enc.columns.size()));
  dm.column_names = enc.column_names();

  // Per-source accessors validated against the training encoding.
  std::map<std::string, const Column*> sources;
  std::map<std::string, std::vector<int>> codes;
  auto source = [&](const std::string& name) -> const Column& {
    if (auto it = sources.find(name); it != sources.end()) return *it->second;
    const Column* c = data.find(name);
    if (!c) throw SchemaError("data lacks column '" + name + "' required by the model");
    std::vector<std::size_t> bad;
    for (std::size_t r = 0; r < rows; ++r)
      if (detail::is_missing(c->raw[r])) bad.push_back(r + 1);
    if (!bad.empty())
      throw ValidationError("missing values in column '" + name + "' at data rows " +
                            detail::row_list(bad));
    if (auto lv = enc.levels.find(name); lv != enc.levels.end()) {
      std::unordered_map<std::string, int> index;
      for (std::size_t i = 0; i < lv->second.size(); ++i)
        index.emplace(lv->second[i], static_cast<int>(i));
      auto& out = codes[name];
      out.reserve(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        auto it = index.find(c->raw[r]);
        if (it == index.end())
          throw ValidationError("level '" + c->raw[r] + "' of column '" + name +
                                "' was not seen when the model was fit");
        out.push_back(it->second);
      }
    } else if (c->categorical) {
      throw ColumnTypeError("column '" + name + "' must be numeric");
    }
    sources.emplace(name, c);
    return *c;
  };

  for (std::size_t k = 0; k < enc.columns.size(); ++k) {
    const auto& col = enc.columns[k];
    for (std::size_t r = 0; r < rows; ++r) dm.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = 1.0;
    for (const auto& f : col.factors) {
      const Column& c = source(f.source);
      for (std::size_t r = 0; r < rows; ++r) {
        const double v = f.level < 0 ? c.values[r] : (codes[f.source][r] == f.level ? 1.0 : 0.0);
        dm.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) *= v;
      }
    }
  }
  if (enc.scale_par) {
    const Column& c = source(*enc.scale_par);
    dm.p = Eigen::Map<const Eigen::VectorXd>(c.values.data(), static_cast<Eigen::Index>(rows));
  }

  dm.obs_start = data.obs_start;
  dm.panel_of_obs = data.panel_of_obs;
  dm.num_panels = static_cast<int>(data.panel_labels.size());
  if (data.has_outcome()) {
    dm.chosen_row.resize(data.num_obs());
    for (std::size_t n = 0; n < data.num_obs(); ++n)
      dm.chosen_row[n] = data.obs_start[n] + data.chosen_position(n);
    dm = precompute_differences(std::move(dm));
  }
  return dm;
}

inline DesignMatrix encode(const LongChoiceData& data, const std::vector<std::string>& pars,
                           const std::optional<std::string>& scale_par = std::nullopt) {
  return apply_encoding(make_encoding(data, pars, scale_par), data);
}

/// Share of observations choosing each within-observation position.
inline std::vector<double> chosen_position_frequencies(const LongChoiceData& data) {
  std::vector<double> freq;
  if (!data.has_outcome()) return freq;
  for (std::size_t n = 0; n < data.num_obs(); ++n) {
    const std::size_t pos = data.chosen_position(n);
    if (pos >= freq.size()) freq.resize(pos + 1, 0.0);
    freq[pos] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(data.num_obs());
  return freq;
}

}  // namespace wtplogit
