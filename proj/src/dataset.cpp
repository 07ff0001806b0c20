#include "seqmix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "seqmix/errors.hpp"

namespace seqmix {

namespace {

std::vector<std::vector<std::uint8_t>> collect_observed(const std::vector<std::uint8_t>& states,
                                                        int n, int T, int v) {
  std::vector<std::vector<std::uint8_t>> observed(T);
  std::vector<char> seen(static_cast<std::size_t>(v));
  for (int t = 0; t < T; ++t) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int i = 0; i < n; ++i) seen[states[static_cast<std::size_t>(i) * T + t]] = 1;
    for (int s = 0; s < v; ++s)
      if (seen[s]) observed[t].push_back(static_cast<std::uint8_t>(s));
  }
  return observed;
}

// Minimal RFC-style CSV: quoted fields may contain the delimiter and doubled
// quotes. Trailing \r from CRLF files is stripped.
std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = value;
  return true;
}

int find_column(const std::vector<std::string>& header, const std::string& name,
                const char* role) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw input_error(std::string("unknown ") + role + " column '" + name + "'");
  }
  return static_cast<int>(it - header.begin());
}

Eigen::VectorXd normalise_weights(Eigen::VectorXd raw) {
  const double total = raw.sum();
  if (total <= 0.0) throw input_error("weights sum to zero");
  return raw * (static_cast<double>(raw.size()) / total);
}

}  // namespace

SequenceDataset::SequenceDataset(Alphabet alphabet, std::vector<std::uint8_t> states, int n, int T,
                                 Eigen::VectorXd weights, Eigen::VectorXd raw_weights,
                                 std::vector<std::string> ids, Eigen::MatrixXd covariates,
                                 std::vector<std::string> covariate_names,
                                 std::vector<CovariateGroup> covariate_groups)
    : alphabet_(std::move(alphabet)),
      states_(std::move(states)),
      n_(n),
      T_(T),
      weights_(std::move(weights)),
      raw_weights_(std::move(raw_weights)),
      ids_(std::move(ids)),
      covariates_(std::move(covariates)),
      covariate_names_(std::move(covariate_names)),
      covariate_groups_(std::move(covariate_groups)) {
  if (n_ < 1) throw input_error("dataset needs at least one row");
  if (T_ < 1) throw input_error("dataset needs at least one time point");
  if (states_.size() != static_cast<std::size_t>(n_) * T_) {
    throw input_error("state matrix size does not match n x T");
  }
  const int v = alphabet_.size();
  for (std::uint8_t s : states_) {
    if (s >= v) throw input_error("state index out of alphabet range");
  }
  if (weights_.size() != n_ || raw_weights_.size() != n_) {
    throw input_error("weight vector length does not match n");
  }
  if (weights_.minCoeff() < 0.0) throw input_error("negative weight");
  if (covariates_.size() > 0 && covariates_.rows() != n_) {
    throw input_error("covariate rows do not match n");
  }
  if (static_cast<int>(covariate_names_.size()) != covariates_.cols()) {
    throw input_error("covariate names do not match columns");
  }
  observed_ = collect_observed(states_, n_, T_, v);
}

Eigen::MatrixXd SequenceDataset::design_for(const std::vector<std::string>& group_names,
                                            std::vector<std::string>* column_names) const {
  std::vector<int> cols;
  for (const auto& name : group_names) {
    auto it = std::find_if(covariate_groups_.begin(), covariate_groups_.end(),
                           [&](const CovariateGroup& g) { return g.name == name; });
    if (it == covariate_groups_.end()) throw input_error("unknown covariate '" + name + "'");
    cols.insert(cols.end(), it->columns.begin(), it->columns.end());
  }
  Eigen::MatrixXd X(n_, static_cast<int>(cols.size()));
  if (column_names) column_names->clear();
  for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
    X.col(j) = covariates_.col(cols[j]);
    if (column_names) column_names->push_back(covariate_names_[cols[j]]);
  }
  return X;
}

SequenceDataset SequenceDataset::with_weights(Eigen::VectorXd weights) const {
  return SequenceDataset(alphabet_, states_, n_, T_, std::move(weights), raw_weights_, ids_,
                         covariates_, covariate_names_, covariate_groups_);
}

SequenceDataset parse_csv_text(std::string_view text, const CsvSchema& schema) {
  std::vector<std::vector<std::string>> records;
  {
    std::string line;
    std::istringstream in{std::string(text)};
    while (std::getline(in, line)) {
      if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
      records.push_back(split_csv_line(line, schema.delimiter));
    }
  }
  if (records.empty()) throw input_error("empty CSV input");
  const auto header = records.front();
  const int n = static_cast<int>(records.size()) - 1;
  if (n < 1) throw input_error("CSV has a header but no data rows");
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw input_error("ragged CSV: row " + std::to_string(r) + " has " +
                        std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(header.size()));
    }
  }

  std::vector<int> seq_cols;
  if (!schema.sequence_columns.empty()) {
    for (const auto& name : schema.sequence_columns)
      seq_cols.push_back(find_column(header, name, "sequence"));
  } else if (!schema.sequence_prefix.empty()) {
    for (int j = 0; j < static_cast<int>(header.size()); ++j)
      if (header[j].rfind(schema.sequence_prefix, 0) == 0) seq_cols.push_back(j);
    if (seq_cols.empty()) {
      throw input_error("no columns match sequence prefix '" + schema.sequence_prefix + "'");
    }
  } else {
    throw input_error("schema must name sequence columns or a sequence prefix");
  }
  const int T = static_cast<int>(seq_cols.size());

  const int id_col = schema.id_column.empty() ? -1 : find_column(header, schema.id_column, "id");
  const int w_col =
      schema.weight_column.empty() ? -1 : find_column(header, schema.weight_column, "weight");

  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    for (int c : seq_cols) {
      const std::string& cell = records[i + 1][c];
      if (cell.empty()) {
        throw input_error("empty sequence cell at row " + std::to_string(i + 1) + ", column '" +
                          header[c] + "'");
      }
      labels.push_back(cell);
    }
  }
  Alphabet alphabet(labels);

  std::vector<std::uint8_t> states(static_cast<std::size_t>(n) * T);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      states[static_cast<std::size_t>(i) * T + t] =
          static_cast<std::uint8_t>(*alphabet.index(records[i + 1][seq_cols[t]]));
    }
  }

  Eigen::VectorXd raw = Eigen::VectorXd::Ones(n);
  if (w_col >= 0) {
    for (int i = 0; i < n; ++i) {
      double w;
      if (!parse_double(records[i + 1][w_col], &w)) {
        throw input_error("non-numeric weight at row " + std::to_string(i + 1));
      }
      if (w < 0.0) throw input_error("negative weight at row " + std::to_string(i + 1));
      raw[i] = w;
    }
  }

  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = id_col >= 0 ? records[i + 1][id_col] : std::to_string(i + 1);
  }

  // Covariates: a column where every cell parses as a number passes through;
  // otherwise it is treated as categorical and expanded to indicators with the
  // lexicographically first level as baseline.
  std::vector<std::string> cov_names;
  std::vector<CovariateGroup> groups;
  std::vector<Eigen::VectorXd> cov_columns;
  for (const auto& name : schema.covariate_columns) {
    const int c = find_column(header, name, "covariate");
    bool numeric = true;
    Eigen::VectorXd values(n);
    for (int i = 0; i < n; ++i) {
      if (!parse_double(records[i + 1][c], &values[i])) {
        numeric = false;
        break;
      }
    }
    CovariateGroup group{name, {}};
    if (numeric) {
      group.columns.push_back(static_cast<int>(cov_columns.size()));
      cov_columns.push_back(values);
      cov_names.push_back(name);
    } else {
      std::set<std::string> levels;
      for (int i = 0; i < n; ++i) levels.insert(records[i + 1][c]);
      if (levels.size() < 2) {
        throw input_error("categorical covariate '" + name + "' has a single level");
      }
      bool first = true;
      for (const auto& level : levels) {
        if (first) {  // baseline
          first = false;
          continue;
        }
        Eigen::VectorXd ind(n);
        for (int i = 0; i < n; ++i) ind[i] = records[i + 1][c] == level ? 1.0 : 0.0;
        group.columns.push_back(static_cast<int>(cov_columns.size()));
        cov_columns.push_back(ind);
        cov_names.push_back(name + "=" + level);
      }
    }
    groups.push_back(std::move(group));
  }
  Eigen::MatrixXd covariates(n, static_cast<int>(cov_columns.size()));
  for (int j = 0; j < covariates.cols(); ++j) covariates.col(j) = cov_columns[j];

  return SequenceDataset(std::move(alphabet), std::move(states), n, T, normalise_weights(raw), raw,
                         std::move(ids), std::move(covariates), std::move(cov_names),
                         std::move(groups));
}

SequenceDataset parse_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_text(buf.str(), schema);
}

SequenceDataset trim_time_range(const SequenceDataset& ds, int first, int last) {
  if (first < 0 || last >= ds.length() || first > last) {
    throw input_error("time range [" + std::to_string(first) + ", " + std::to_string(last) +
                      "] out of bounds for T=" + std::to_string(ds.length()));
  }
  const int T = last - first + 1;
  std::vector<std::uint8_t> states(static_cast<std::size_t>(ds.rows()) * T);
  for (int i = 0; i < ds.rows(); ++i) {
    for (int t = 0; t < T; ++t) states[static_cast<std::size_t>(i) * T + t] = ds.state(i, first + t);
  }
  return SequenceDataset(ds.alphabet(), std::move(states), ds.rows(), T, ds.weights(),
                         ds.raw_weights(), ds.ids(), ds.covariates(), ds.covariate_names(),
                         ds.covariate_groups());
}

std::pair<SequenceDataset, AggregationMap> aggregate_duplicates(const SequenceDataset& ds,
                                                                bool include_covariates) {
  const int n = ds.rows();
  const int T = ds.length();
  const int r = include_covariates ? ds.n_covariates() : 0;

  std::unordered_map<std::string, int> index;
  index.reserve(static_cast<std::size_t>(n));
  AggregationMap map;
  map.unique_of.resize(n);
  map.raw_rows = n;

  std::vector<int> representatives;
  for (int i = 0; i < n; ++i) {
    std::string key(reinterpret_cast<const char*>(ds.row(i).data()), static_cast<std::size_t>(T));
    if (r > 0) {
      key.reserve(key.size() + static_cast<std::size_t>(r) * sizeof(double));
      for (int j = 0; j < r; ++j) {
        const double value = ds.covariates()(i, j);
        key.append(reinterpret_cast<const char*>(&value), sizeof(double));
      }
    }
    auto [it, inserted] = index.emplace(std::move(key), static_cast<int>(representatives.size()));
    if (inserted) representatives.push_back(i);
    map.unique_of[i] = it->second;
  }

  const int m = static_cast<int>(representatives.size());
  std::vector<std::uint8_t> states(static_cast<std::size_t>(m) * T);
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(m);
  std::vector<std::string> ids(m);
  Eigen::MatrixXd covariates(m, ds.n_covariates());
  for (int u = 0; u < m; ++u) {
    const int i = representatives[u];
    std::copy(ds.row(i).begin(), ds.row(i).end(), states.begin() + static_cast<std::size_t>(u) * T);
    ids[u] = ds.ids()[i];
    if (ds.n_covariates() > 0) covariates.row(u) = ds.covariates().row(i);
  }
  for (int i = 0; i < n; ++i) {
    weights[map.unique_of[i]] += ds.weights()[i];
    raw[map.unique_of[i]] += ds.raw_weights()[i];
  }

  SequenceDataset out(ds.alphabet(), std::move(states), m, T, std::move(weights), std::move(raw),
                      std::move(ids), std::move(covariates), ds.covariate_names(),
                      ds.covariate_groups());
  return {std::move(out), std::move(map)};
}

Eigen::MatrixXd state_distribution(const SequenceDataset& ds) {
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(ds.length(), ds.v());
  for (int i = 0; i < ds.rows(); ++i) {
    const double w = ds.weights()[i];
    for (int t = 0; t < ds.length(); ++t) freq(t, ds.state(i, t)) += w;
  }
  const double total = ds.weight_total();
  return freq / total;
}

Eigen::VectorXd transversal_entropy(const SequenceDataset& ds) {
  const Eigen::MatrixXd p = state_distribution(ds);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(ds.length());
  for (int t = 0; t < p.rows(); ++t) {
    double e = 0.0;
    for (int j = 0; j < p.cols(); ++j) {
      if (p(t, j) > 0.0) e -= p(t, j) * std::log(p(t, j));
    }
    h[t] = e;
  }
  return h;
}

std::string sps_encode(std::span<const std::uint8_t> seq, const Alphabet& alphabet) {
  if (seq.empty()) throw input_error("cannot encode an empty sequence");
  std::string out;
  std::size_t start = 0;
  for (std::size_t t = 1; t <= seq.size(); ++t) {
    if (t == seq.size() || seq[t] != seq[start]) {
      if (!out.empty()) out += '-';
      out += '(' + alphabet.label(seq[start]) + ',' + std::to_string(t - start) + ')';
      start = t;
    }
  }
  return out;
}

SequenceDataset dataset_from_labels(
    const std::vector<std::vector<std::string>>& rows, std::vector<double> weights,
    const std::vector<std::pair<std::string, std::vector<double>>>& covariates) {
  if (rows.empty()) throw input_error("no rows");
  const int n = static_cast<int>(rows.size());
  const int T = static_cast<int>(rows.front().size());
  std::vector<std::string> labels;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != T) throw input_error("ragged rows");
    labels.insert(labels.end(), row.begin(), row.end());
  }
  Alphabet alphabet(labels);
  std::vector<std::uint8_t> states(static_cast<std::size_t>(n) * T);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      states[static_cast<std::size_t>(i) * T + t] = static_cast<std::uint8_t>(*alphabet.index(rows[i][t]));

  Eigen::VectorXd raw = Eigen::VectorXd::Ones(n);
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n) throw input_error("weights length mismatch");
    raw = Eigen::Map<Eigen::VectorXd>(weights.data(), n);
    if (raw.minCoeff() < 0.0) throw input_error("negative weight");
  }

  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);

  Eigen::MatrixXd X(n, static_cast<int>(covariates.size()));
  std::vector<std::string> cov_names;
  std::vector<CovariateGroup> groups;
  for (int j = 0; j < static_cast<int>(covariates.size()); ++j) {
    if (static_cast<int>(covariates[j].second.size()) != n) {
      throw input_error("covariate '" + covariates[j].first + "' length mismatch");
    }
    for (int i = 0; i < n; ++i) X(i, j) = covariates[j].second[i];
    cov_names.push_back(covariates[j].first);
    groups.push_back({covariates[j].first, {j}});
  }

  return SequenceDataset(std::move(alphabet), std::move(states), n, T, normalise_weights(raw), raw,
                         std::move(ids), std::move(X), std::move(cov_names), std::move(groups));
}

}  // namespace seqmix
