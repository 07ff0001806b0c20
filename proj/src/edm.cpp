#include "seqmix/edm.hpp"

#include <cmath>

#include "seqmix/distance.hpp"
#include "seqmix/errors.hpp"
#include "seqmix/rng.hpp"

namespace seqmix {

double edm_log_density(std::span<const std::uint8_t> s, std::span<const std::uint8_t> theta,
                       std::span<const double> lambda_t, int v) {
  return -weighted_hamming(s, theta, lambda_t) - log_psi_weighted(lambda_t, v);
}

double noise_log_density(int T, int v) { return -static_cast<double>(T) * std::log(v); }

std::vector<int> theta_tie_rank(std::uint64_t seed, int v) {
  auto g = rng::engine(seed, 0x7468657461ULL);  // "theta" stream
  const auto perm = rng::permutation(g, v);
  std::vector<int> rank(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) rank[static_cast<std::size_t>(perm[i])] = i;
  return rank;
}

std::vector<std::uint8_t> estimate_theta(const SequenceDataset& ds, const Eigen::MatrixXd& Z,
                                         int g, const std::vector<int>& tie_rank) {
  const int n = ds.rows();
  const int T = ds.length();
  const int v = ds.v();

  Eigen::VectorXd zw(n);
  for (int i = 0; i < n; ++i) zw[i] = Z(i, g) * ds.weights()[i];
  if (zw.sum() <= 0.0) {
    throw estimation_error("component " + std::to_string(g + 1) +
                           " has zero total responsibility");
  }

  std::vector<std::uint8_t> theta(static_cast<std::size_t>(T));
  std::vector<double> mass(static_cast<std::size_t>(v));
  for (int t = 0; t < T; ++t) {
    std::fill(mass.begin(), mass.end(), 0.0);
    for (int i = 0; i < n; ++i) mass[ds.state(i, t)] += zw[i];
    const auto& candidates = ds.observed_states(t);
    std::uint8_t best = candidates.front();
    for (std::uint8_t s : candidates) {
      if (mass[s] > mass[best] ||
          (mass[s] == mass[best] && tie_rank[s] < tie_rank[best])) {
        best = s;
      }
    }
    theta[static_cast<std::size_t>(t)] = best;
  }
  return theta;
}

namespace {

// max(0, log(v-1) + log(num/den - 1)), written as log(num - den) - log(den)
// for stability, with a zero denominator mapped to the configured ceiling.
double precision_update(double num, double den, int v, double lambda_max) {
  if (den <= 0.0) return num > 0.0 ? lambda_max : 0.0;
  if (num <= den) return 0.0;
  const double lambda = std::log(static_cast<double>(v - 1)) + std::log(num - den) - std::log(den);
  return std::min(lambda, lambda_max);
}

}  // namespace

PrecisionStructure estimate_precision(const ModelSpec& spec, const SequenceDataset& ds,
                                      const Eigen::MatrixXd& Z,
                                      const std::vector<std::vector<std::uint8_t>>& thetas) {
  const int n = ds.rows();
  const int T = ds.length();
  const int v = ds.v();
  const int gnn = spec.non_noise();
  const double lambda_max = spec.control.lambda_max;

  // Mismatch mass per (component, time) and responsibility mass per component.
  Eigen::MatrixXd mismatch = Eigen::MatrixXd::Zero(gnn, T);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(gnn);
  for (int g = 0; g < gnn; ++g) {
    const auto& theta = thetas[static_cast<std::size_t>(g)];
    for (int i = 0; i < n; ++i) {
      const double zw = Z(i, g) * ds.weights()[i];
      if (zw == 0.0) continue;
      mass[g] += zw;
      const auto row = ds.row(i);
      for (int t = 0; t < T; ++t) {
        if (row[static_cast<std::size_t>(t)] != theta[static_cast<std::size_t>(t)]) {
          mismatch(g, t) += zw;
        }
      }
    }
  }

  PrecisionStructure out = PrecisionStructure::zeros(spec.type, gnn, T);
  switch (out.kind) {
    case PrecisionStructure::Kind::scalar:
      out.values[0] = precision_update(T * mass.sum(), mismatch.sum(), v, lambda_max);
      break;
    case PrecisionStructure::Kind::per_cluster:
      for (int g = 0; g < gnn; ++g) {
        out.values[static_cast<std::size_t>(g)] =
            precision_update(T * mass[g], mismatch.row(g).sum(), v, lambda_max);
      }
      break;
    case PrecisionStructure::Kind::per_time:
      for (int t = 0; t < T; ++t) {
        out.values[static_cast<std::size_t>(t)] =
            precision_update(mass.sum(), mismatch.col(t).sum(), v, lambda_max);
      }
      break;
    case PrecisionStructure::Kind::per_cluster_time:
      for (int g = 0; g < gnn; ++g) {
        for (int t = 0; t < T; ++t) {
          out.values[static_cast<std::size_t>(g) * T + t] =
              precision_update(mass[g], mismatch(g, t), v, lambda_max);
        }
      }
      break;
  }
  return out;
}

Eigen::MatrixXd component_loglik_matrix(const SequenceDataset& ds, const ComponentParams& params,
                                        const ModelSpec& spec) {
  const int n = ds.rows();
  const int T = ds.length();
  const int v = ds.v();
  const int gnn = spec.non_noise();

  Eigen::MatrixXd L(n, spec.G);
  for (int g = 0; g < gnn; ++g) {
    const auto lambda = params.precision.row(g);
    const auto& theta = params.thetas[static_cast<std::size_t>(g)];
    const double log_psi = log_psi_weighted(lambda, v);
    for (int i = 0; i < n; ++i) {
      L(i, g) = -weighted_hamming(ds.row(i), theta, lambda) - log_psi;
    }
  }
  if (has_noise(spec.type)) L.col(spec.G - 1).setConstant(noise_log_density(T, v));
  return L;
}

}  // namespace seqmix
