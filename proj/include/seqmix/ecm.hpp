#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqmix/dataset.hpp"
#include "seqmix/edm.hpp"
#include "seqmix/gating.hpp"
#include "seqmix/model.hpp"

namespace seqmix {

struct FittedModel {
  ModelSpec spec;
  Alphabet alphabet;
  int n = 0;
  int T = 0;

  ComponentParams components;
  GatingParams gating;
  std::vector<std::string> gating_column_names;  // expanded design columns

  Eigen::MatrixXd Z;            // input rows x G responsibilities
  std::vector<int> map_labels;  // argmax of each Z row
  std::vector<std::string> sps_labels;  // per component; "Noise" for the noise one

  std::vector<double> loglik_trace;
  double loglik = -std::numeric_limits<double>::infinity();
  int n_params = 0;
  double bic = -std::numeric_limits<double>::infinity();
  double wdbs = std::numeric_limits<double>::quiet_NaN();
  double wasw = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

// Rejects inadmissible (type, G, gating) combinations with an explanation:
// G=1 fits only CC, CU or CCN; UCN/UUN at G=2 alias CCN/CUN; covariate gating
// needs G >= 2 (GN) or two non-noise components (NGN).
void validate_spec(const ModelSpec& spec, const SequenceDataset& ds);

struct EStepResult {
  Eigen::MatrixXd Z;
  double loglik = 0.0;
};

// Responsibilities and weighted pseudo log-likelihood. Sampling weights enter
// the log-likelihood but cancel from the responsibility ratio, so Z does not
// depend on them. X is the gating design (n x 0 when covariates are unused).
EStepResult e_step(const SequenceDataset& ds, const ComponentParams& components,
                   const GatingParams& gating, const Eigen::MatrixXd& X, const ModelSpec& spec);

// Ward agglomeration with mass-weighted Lance-Williams updates on squared
// distances, cut at k clusters. Labels are 0..k-1 in order of each cluster's
// smallest member index.
std::vector<int> ward_labels(const Eigen::MatrixXi& D, const Eigen::VectorXd& w, int k);

// Ward cut refined by the weighted PAM swap phase: medoids minimise
// sum_i w_i d(i, medoid(cluster(i))) until no single swap improves.
std::vector<int> init_partition(const Eigen::MatrixXi& D, const Eigen::VectorXd& w, int k,
                                std::uint64_t seed);

// Scales a hard (G-1)-column allocation by 1 - tau0 and appends a constant
// noise column, keeping rows summing to 1.
Eigen::MatrixXd init_noise(const Eigen::MatrixXd& Z0, double tau0_init);

struct AitkenResult {
  bool converged = false;
  double l_inf = std::numeric_limits<double>::infinity();
};

// Aitken acceleration check on three consecutive log-likelihood values:
// converged when the extrapolated limit is within tol of the newest value.
AitkenResult aitken_check(double l_prev2, double l_prev, double l_curr, double tol);

// Full ECM fit. Duplicate rows (including covariate pattern when gating on
// covariates) are aggregated internally with summed weights, which leaves the
// pseudo log-likelihood unchanged; responsibilities are expanded back to the
// input rows on return.
FittedModel fit(const SequenceDataset& ds, const ModelSpec& spec);

// Same, but the ECM starts from the supplied responsibility matrix (input
// rows x G) instead of the Ward+PAM partition. Used by the weighted likelihood
// bootstrap to keep component labels stable across refits.
FittedModel fit_with_init(const SequenceDataset& ds, const ModelSpec& spec,
                          const Eigen::MatrixXd& Z_init);

// Post-hoc regression of the fitted memberships on covariates of the dataset
// the model was fitted to.
CoefficientTable two_step_regress(const FittedModel& model, const SequenceDataset& ds,
                                  const std::vector<std::string>& covariates, ResponseKind kind);

}  // namespace seqmix
