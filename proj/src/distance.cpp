#include "seqmix/distance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "seqmix/errors.hpp"

namespace seqmix {

int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw input_error("hamming: length mismatch");
  int d = 0;
  for (std::size_t t = 0; t < a.size(); ++t) d += a[t] != b[t];
  return d;
}

double weighted_hamming(std::span<const std::uint8_t> s, std::span<const std::uint8_t> theta,
                        std::span<const double> lambda_t) {
  if (s.size() != theta.size() || s.size() != lambda_t.size()) {
    throw input_error("weighted_hamming: length mismatch");
  }
  double d = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (lambda_t[t] < 0.0) throw input_error("weighted_hamming: negative rate");
    if (s[t] != theta[t]) d += lambda_t[t];
  }
  return d;
}

Eigen::MatrixXi pairwise_matrix(const SequenceDataset& ds) {
  const int n = ds.rows();
  Eigen::MatrixXi D(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0;
    const auto ri = ds.row(i);
    for (int j = i + 1; j < n; ++j) {
      const int d = hamming(ri, ds.row(j));
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

double log_psi_hamming(double lambda, int T, int v) {
  if (T < 1) throw input_error("log_psi_hamming: T must be >= 1");
  if (v < 2) throw input_error("log_psi_hamming: v must be >= 2");
  if (lambda < 0.0) throw input_error("log_psi_hamming: negative precision");
  return T * std::log1p((v - 1) * std::exp(-lambda));
}

double log_psi_weighted(std::span<const double> lambda_t, int v) {
  if (v < 2) throw input_error("log_psi_weighted: v must be >= 2");
  double sum = 0.0;
  for (double l : lambda_t) {
    if (l < 0.0) throw input_error("log_psi_weighted: negative precision");
    sum += std::log1p((v - 1) * std::exp(-l));
  }
  return sum;
}

double enumerate_log_psi(std::span<const double> lambda_t, int v,
                         std::span<const std::uint8_t> theta) {
  const int T = static_cast<int>(lambda_t.size());
  if (v < 2) throw input_error("enumerate_log_psi: v must be >= 2");
  if (theta.size() != lambda_t.size()) throw input_error("enumerate_log_psi: length mismatch");
  double count = std::pow(static_cast<double>(v), T);
  if (count > 1e7) throw input_error("enumerate_log_psi: v^T too large");

  std::vector<std::uint8_t> sigma(T, 0);
  std::vector<double> exponents;
  exponents.reserve(static_cast<std::size_t>(count));
  while (true) {
    exponents.push_back(-weighted_hamming(sigma, theta, lambda_t));
    int t = T - 1;
    while (t >= 0 && sigma[t] == v - 1) sigma[t--] = 0;
    if (t < 0) break;
    ++sigma[t];
  }
  const double m = *std::max_element(exponents.begin(), exponents.end());
  double acc = 0.0;
  for (double e : exponents) acc += std::exp(e - m);
  return m + std::log(acc);
}

}  // namespace seqmix
