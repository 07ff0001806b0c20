#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "seqmix/model.hpp"

namespace seqmix {

// Mixing-proportion model. In covariate mode `beta` is (r+1) x C with the
// first column fixed to zeros (baseline component); C spans all components
// under GN and the non-noise components under NGN, where the noise probability
// is the constant tau0. In the other modes `tau` holds the proportions
// directly (the noise share, when present, is its last entry).
struct GatingParams {
  GatingMode mode = GatingMode::free_proportions;
  NoiseGating noise = NoiseGating::none;
  int G = 1;
  bool noise_component = false;
  Eigen::MatrixXd beta;
  std::vector<std::string> coef_names;
  Eigen::VectorXd tau;
  double tau0 = std::numeric_limits<double>::quiet_NaN();
};

// n x G row-stochastic matrix of membership probabilities. X is the design
// without intercept; the intercept column is prepended internally.
Eigen::MatrixXd predict_tau(const GatingParams& params, const Eigen::MatrixXd& X);

// Weighted multinomial logistic objective sum_i w_i sum_g R(i,g) log tau_g(x_i).
double mlr_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& w, const Eigen::MatrixXd& beta);

// Weighted MLR with soft responses, component 1 as baseline. Newton steps with
// step halving guarantee the objective never falls below its value at beta0
// (zeros when beta0 is empty). The ridge term enters the Newton system on the
// non-intercept coefficients only, which keeps separated fits finite.
Eigen::MatrixXd fit_mlr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& R,
                        const Eigen::VectorXd& w, const Eigen::MatrixXd& beta0 = {},
                        double ridge = 1e-8, int max_iter = 100);

// tau_g = sum_i R(i,g) w_i / sum_i w_i.
Eigen::VectorXd estimate_tau_free(const Eigen::MatrixXd& R, const Eigen::VectorXd& w);

// One gating CM-step: updates proportions / coefficients from the current
// responsibilities, warm-starting the MLR at `current` so the gating part of
// the objective cannot decrease.
GatingParams update_gating(const GatingParams& current, const Eigen::MatrixXd& Z,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                           const ModelSpec& spec);

enum class ResponseKind { soft, map };

struct CoefficientTable {
  std::vector<std::string> coef_names;   // (Intercept) first
  std::vector<std::string> class_names;  // one per non-baseline component
  Eigen::MatrixXd beta;                  // (r+1) x C, column 0 zeros
};

// Post-hoc regression of fitted memberships on covariates. When the model has
// a noise component the responsibilities are renormalised over the non-noise
// components first; `map` uses hard assignments as the response.
CoefficientTable two_step_coefficients(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                                       const std::vector<std::string>& column_names,
                                       const Eigen::VectorXd& w, bool noise_component,
                                       ResponseKind kind, double ridge = 1e-8,
                                       int max_iter = 100);

}  // namespace seqmix
