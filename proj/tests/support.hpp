#pragma once

// Shared helpers for the test suites: an independent EDM sampler, a mixture
// data generator, adjusted Rand index, and a golden-section maximiser used as
// the numeric oracle for the closed-form precision updates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "seqmix/dataset.hpp"
#include "seqmix/rng.hpp"

namespace test_support {

inline std::vector<std::string> state_labels(int v) {
  std::vector<std::string> labels;
  for (int s = 0; s < v; ++s) labels.push_back(std::string(1, static_cast<char>('a' + s)));
  return labels;
}

// Under the Hamming distance the EDM factorises over positions:
// P(s_t = theta_t) = 1 / ((v-1) e^{-lambda_t} + 1), every other state sharing
// the remainder equally. This sampler is independent of the library code.
inline std::vector<int> sample_edm_row(std::mt19937_64& gen, const std::vector<int>& theta,
                                       const std::vector<double>& lambda, int v) {
  const int T = static_cast<int>(theta.size());
  std::vector<int> row(T);
  for (int t = 0; t < T; ++t) {
    const double p_match = 1.0 / ((v - 1) * std::exp(-lambda[t]) + 1.0);
    const double u = seqmix::rng::uniform01(gen);
    if (u < p_match) {
      row[t] = theta[t];
    } else {
      const double rest = (u - p_match) / (1.0 - p_match);
      int offset = 1 + std::min(v - 2, static_cast<int>(rest * (v - 1)));
      row[t] = (theta[t] + offset) % v;
    }
  }
  return row;
}

struct MixtureSim {
  std::vector<std::vector<std::string>> rows;
  std::vector<int> truth;
  std::vector<std::vector<int>> thetas;
};

// G components with maximally separated central sequences theta_g(t) = (g+t) mod v
// and a common scalar precision.
inline MixtureSim simulate_mixture(std::uint64_t seed, int n, int T, int v, int G, double lambda,
                                   const std::vector<double>& tau = {}) {
  auto gen = seqmix::rng::engine(seed, 0x73696dULL);
  MixtureSim sim;
  for (int g = 0; g < G; ++g) {
    std::vector<int> theta(T);
    for (int t = 0; t < T; ++t) theta[t] = (g + t) % v;
    sim.thetas.push_back(std::move(theta));
  }
  const auto labels = state_labels(v);
  const std::vector<double> lambda_t(T, lambda);
  for (int i = 0; i < n; ++i) {
    double u = seqmix::rng::uniform01(gen);
    int g = 0;
    if (tau.empty()) {
      g = std::min(G - 1, static_cast<int>(u * G));
    } else {
      double acc = 0.0;
      for (int h = 0; h < G; ++h) {
        acc += tau[h];
        if (u < acc) {
          g = h;
          break;
        }
        g = h;
      }
    }
    sim.truth.push_back(g);
    const auto row = sample_edm_row(gen, sim.thetas[g], lambda_t, v);
    std::vector<std::string> cells;
    for (int s : row) cells.push_back(labels[s]);
    sim.rows.push_back(std::move(cells));
  }
  return sim;
}

inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<long long>> m(ka, std::vector<long long>(kb, 0));
  for (int i = 0; i < n; ++i) m[a[i]][b[i]]++;
  auto comb2 = [](long long x) { return x * (x - 1) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i) {
    long long row = 0;
    for (int j = 0; j < kb; ++j) {
      sum_ij += comb2(m[i][j]);
      row += m[i][j];
    }
    sum_a += comb2(row);
  }
  for (int j = 0; j < kb; ++j) {
    long long col = 0;
    for (int i = 0; i < ka; ++i) col += m[i][j];
    sum_b += comb2(col);
  }
  const double expected = sum_a * sum_b / comb2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

// Golden-section maximiser for a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

inline seqmix::SequenceDataset dataset_from_indices(
    const std::vector<std::vector<int>>& rows, int v, std::vector<double> weights = {},
    const std::vector<std::pair<std::string, std::vector<double>>>& covariates = {}) {
  const auto labels = state_labels(v);
  std::vector<std::vector<std::string>> label_rows;
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (int s : row) cells.push_back(labels[s]);
    label_rows.push_back(std::move(cells));
  }
  return seqmix::dataset_from_labels(label_rows, std::move(weights), covariates);
}

// Random dataset whose every column shows at least two distinct states, so
// no precision denominator can vanish by construction.
inline std::vector<std::vector<int>> random_rows(std::mt19937_64& gen, int n, int T, int v) {
  std::vector<std::vector<int>> rows(n, std::vector<int>(T));
  for (int t = 0; t < T; ++t) {
    while (true) {
      for (int i = 0; i < n; ++i) rows[i][t] = seqmix::rng::uniform_int(gen, v);
      bool mixed = false;
      for (int i = 1; i < n && !mixed; ++i) mixed = rows[i][t] != rows[0][t];
      if (mixed) break;
    }
  }
  return rows;
}

}  // namespace test_support
