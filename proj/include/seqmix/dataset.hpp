#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqmix/alphabet.hpp"

namespace seqmix {

// Expanded design columns that came from one source covariate. A categorical
// column contributes one indicator per non-baseline level; a numeric column
// contributes itself.
struct CovariateGroup {
  std::string name;
  std::vector<int> columns;
};

// Equal-length categorical sequences with sampling weights and covariates.
// Weights are normalised at parse time so they sum to the number of rows.
// Aggregating duplicates preserves the total, so weight_total() rather than
// rows() is the "n" that enters likelihood formulas downstream.
class SequenceDataset {
public:
  SequenceDataset() = default;
  SequenceDataset(Alphabet alphabet, std::vector<std::uint8_t> states, int n, int T,
                  Eigen::VectorXd weights, Eigen::VectorXd raw_weights,
                  std::vector<std::string> ids, Eigen::MatrixXd covariates,
                  std::vector<std::string> covariate_names,
                  std::vector<CovariateGroup> covariate_groups);

  int rows() const { return n_; }
  int length() const { return T_; }
  int v() const { return alphabet_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }

  std::uint8_t state(int i, int t) const {
    return states_[static_cast<std::size_t>(i) * T_ + t];
  }
  std::span<const std::uint8_t> row(int i) const {
    return {states_.data() + static_cast<std::size_t>(i) * T_, static_cast<std::size_t>(T_)};
  }

  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& raw_weights() const { return raw_weights_; }
  double weight_total() const { return weights_.sum(); }

  const std::vector<std::string>& ids() const { return ids_; }

  int n_covariates() const { return static_cast<int>(covariates_.cols()); }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<CovariateGroup>& covariate_groups() const { return covariate_groups_; }

  // States observed at time point t across all rows, sorted ascending.
  const std::vector<std::uint8_t>& observed_states(int t) const {
    return observed_[static_cast<std::size_t>(t)];
  }

  // Design matrix (without intercept) for the named covariate groups, in the
  // given group order. Throws input_error on unknown names.
  Eigen::MatrixXd design_for(const std::vector<std::string>& group_names,
                             std::vector<std::string>* column_names = nullptr) const;

  // Copy with the working weights replaced (no renormalisation).
  SequenceDataset with_weights(Eigen::VectorXd weights) const;

private:
  Alphabet alphabet_;
  std::vector<std::uint8_t> states_;  // row-major n x T
  int n_ = 0;
  int T_ = 0;
  Eigen::VectorXd weights_;
  Eigen::VectorXd raw_weights_;
  std::vector<std::string> ids_;
  Eigen::MatrixXd covariates_;  // n x r, expanded
  std::vector<std::string> covariate_names_;
  std::vector<CovariateGroup> covariate_groups_;
  std::vector<std::vector<std::uint8_t>> observed_;  // per t
};

// Column roles for CSV ingestion. Sequence columns are either listed
// explicitly or identified by a shared name prefix (in header order).
struct CsvSchema {
  std::string id_column;
  std::vector<std::string> sequence_columns;
  std::string sequence_prefix;
  std::string weight_column;
  std::vector<std::string> covariate_columns;
  char delimiter = ',';
};

SequenceDataset parse_csv(const std::string& path, const CsvSchema& schema);
SequenceDataset parse_csv_text(std::string_view text, const CsvSchema& schema);

// Restrict to time points [first, last], inclusive.
SequenceDataset trim_time_range(const SequenceDataset& ds, int first, int last);

struct AggregationMap {
  std::vector<int> unique_of;  // original row -> unique row
  int raw_rows = 0;
};

// Merge rows with identical sequences (and covariate patterns, when
// include_covariates is set), summing their weights. First occurrence order
// is preserved, so aggregation is idempotent.
std::pair<SequenceDataset, AggregationMap> aggregate_duplicates(const SequenceDataset& ds,
                                                                bool include_covariates);

// T x v matrix of weighted state frequencies; each row sums to 1.
Eigen::MatrixXd state_distribution(const SequenceDataset& ds);

// Shannon entropy of the state distribution at each time point.
Eigen::VectorXd transversal_entropy(const SequenceDataset& ds);

// Run-length label "(STATE,len)-(STATE,len)-..." over maximal constant runs.
std::string sps_encode(std::span<const std::uint8_t> seq, const Alphabet& alphabet);

// Convenience constructor used by tests and bindings: rows of labels, optional
// weights (normalised to sum to n), optional numeric covariates.
SequenceDataset dataset_from_labels(
    const std::vector<std::vector<std::string>>& rows, std::vector<double> weights = {},
    const std::vector<std::pair<std::string, std::vector<double>>>& covariates = {});

}  // namespace seqmix
