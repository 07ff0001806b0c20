#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "seqmix/dataset.hpp"
#include "seqmix/model.hpp"

namespace seqmix {

// log f(s | theta, lambda) = -d_WH(s, theta | lambda) - log Psi(lambda).
double edm_log_density(std::span<const std::uint8_t> s, std::span<const std::uint8_t> theta,
                       std::span<const double> lambda_t, int v);

// Uniform (noise) component: every sequence has probability v^-T.
double noise_log_density(int T, int v);

// Tie ranks for the weighted mode: a seed-controlled permutation of the state
// indices, fixed for the whole fit so repeated runs break ties identically.
std::vector<int> theta_tie_rank(std::uint64_t seed, int v);

// Weighted per-position mode over the states observed at each time point.
// The winning state maximises sum_i Z(i,g) * w_i * 1{s_it = state}; ties go to
// the state with the smallest tie rank.
std::vector<std::uint8_t> estimate_theta(const SequenceDataset& ds, const Eigen::MatrixXd& Z,
                                         int g, const std::vector<int>& tie_rank);

// Closed-form precision update for the given model type. Non-noise components
// only; a zero denominator (all mass exactly on theta) yields lambda_max.
PrecisionStructure estimate_precision(const ModelSpec& spec, const SequenceDataset& ds,
                                      const Eigen::MatrixXd& Z,
                                      const std::vector<std::vector<std::uint8_t>>& thetas);

// n x G matrix of per-component log densities; the noise column (last) is the
// uniform one.
Eigen::MatrixXd component_loglik_matrix(const SequenceDataset& ds, const ComponentParams& params,
                                        const ModelSpec& spec);

}  // namespace seqmix
