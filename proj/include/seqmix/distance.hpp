#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "seqmix/dataset.hpp"

namespace seqmix {

// Count of mismatching positions between equal-length sequences.
int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Sum of per-time rates over mismatch positions. With a constant rate this is
// rate * hamming.
double weighted_hamming(std::span<const std::uint8_t> s, std::span<const std::uint8_t> theta,
                        std::span<const double> lambda_t);

// Full n x n Hamming distance matrix, zero diagonal.
Eigen::MatrixXi pairwise_matrix(const SequenceDataset& ds);

// log of the exponential-distance normalising constant under the Hamming
// distance: T * log((v-1) * exp(-lambda) + 1). Stored in log space throughout;
// at T=70, v=6 the plain product overflows.
double log_psi_hamming(double lambda, int T, int v);

// Per-time variant: sum_t log((v-1) * exp(-lambda_t) + 1).
double log_psi_weighted(std::span<const double> lambda_t, int v);

// Exact log-sum-exp over all v^T sequences of -d_WH(sigma, theta | lambda).
// Test oracle for the closed forms above; guarded to v^T <= 1e7. The result
// does not depend on theta.
double enumerate_log_psi(std::span<const double> lambda_t, int v,
                         std::span<const std::uint8_t> theta);

}  // namespace seqmix
