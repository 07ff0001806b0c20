#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "seqmix/dataset.hpp"
#include "seqmix/ecm.hpp"
#include "seqmix/model.hpp"

namespace seqmix {

// Free-parameter count: per-position occurrence probabilities behind each
// estimated central sequence, the precision parameters of the model type, and
// the gating parameters. Parameters tied to the fixed-at-zero noise precision
// are not counted.
int count_params(const ModelSpec& spec, const SequenceDataset& ds);

// 2 * loglik - k * log(n); larger is better. Callers pass the total weight
// (equal to the row count for parse-normalised data) as n.
double bic(double loglik, int k, double n);

// Density-based silhouette per observation: log-ratio of the top two
// membership probabilities, self-normalised by the largest ratio. Rows whose
// runner-up probability falls below eps are crisp: they score 1 and are
// excluded from the normalising maximum.
Eigen::VectorXd dbs(const Eigen::MatrixXd& Z, double eps = 1e-100);

// Weighted mean of dbs.
double wdbs(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w, double eps = 1e-100);

// Weighted average silhouette width on an observed distance matrix over a hard
// partition. Silhouettes of singleton clusters are 0 by convention.
double wasw(const Eigen::MatrixXi& D, const std::vector<int>& labels, const Eigen::VectorXd& w);

struct GridEntry {
  ModelSpec spec;
  bool ok = false;
  std::string error;
  double loglik = 0.0;
  int n_params = 0;
  double bic_value = 0.0;
  double wdbs_value = 0.0;
  double wasw_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct GridResult {
  std::vector<GridEntry> table;
  std::optional<FittedModel> best;
  int best_index = -1;
};

// One fit per admissible (type, G) combination; inadmissible combinations are
// skipped and individual fit failures are recorded, not fatal. The best entry
// maximises BIC (ties: fewer parameters, then smaller G, then type order).
GridResult grid_search(const SequenceDataset& ds, const std::vector<ModelType>& types,
                       const std::vector<int>& g_values, const GatingConfig& gating,
                       const Control& control, int threads = 1);

enum class StepDirection { forward, backward };

struct StepwiseCandidate {
  ModelSpec spec;
  bool ok = false;
  double bic_value = 0.0;
  std::string error;
};

struct StepwiseStep {
  std::string action;  // e.g. "Add 'GCSE5eq'", "Remove component", "Stop"
  std::vector<StepwiseCandidate> candidates;
  double best_bic = 0.0;
  bool accepted = false;
  ModelSpec chosen;
};

struct StepwiseTrace {
  StepDirection direction = StepDirection::forward;
  std::vector<StepwiseStep> steps;
  ModelSpec final_spec;
  double final_bic = 0.0;
  std::optional<FittedModel> final_model;
};

// Greedy BIC ascent. Each step considers adding/removing a non-noise component
// and adding/removing one covariate; every action is evaluated across all 8
// model types and, when a noise component and covariates coexist, both the GN
// and NGN settings. Stops when no action improves the BIC. Equal-BIC actions
// are broken by fewer parameters, then lexicographic action name.
StepwiseTrace stepwise(const SequenceDataset& ds, StepDirection direction,
                       const std::vector<std::string>& candidate_covariates,
                       const FittedModel& start, int threads = 1);

}  // namespace seqmix
