#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqmix/errors.hpp"

namespace seqmix {

// Precision constrained (C) or unconstrained (U) across clusters (first
// letter) and time points (second letter); trailing N adds a uniform noise
// component whose precision is fixed at 0.
enum class ModelType { CC, UC, CU, UU, CCN, UCN, CUN, UUN };

constexpr bool has_noise(ModelType m) {
  return m == ModelType::CCN || m == ModelType::UCN || m == ModelType::CUN ||
         m == ModelType::UUN;
}
constexpr bool cluster_varying(ModelType m) {
  return m == ModelType::UC || m == ModelType::UU || m == ModelType::UCN ||
         m == ModelType::UUN;
}
constexpr bool time_varying(ModelType m) {
  return m == ModelType::CU || m == ModelType::UU || m == ModelType::CUN ||
         m == ModelType::UUN;
}

std::string to_string(ModelType m);
ModelType model_type_from_string(const std::string& name);
std::vector<ModelType> all_model_types();

// Decay rates of the non-noise components. Shape follows the model type:
// one value, one per cluster, one per time point, or one per cluster per
// time point. The noise component is not represented here; its rates are
// fixed at 0.
struct PrecisionStructure {
  enum class Kind { scalar, per_cluster, per_time, per_cluster_time };

  Kind kind = Kind::scalar;
  int clusters = 1;  // non-noise components spanned
  int T = 1;
  std::vector<double> values;

  static PrecisionStructure zeros(ModelType type, int non_noise, int T);

  double operator()(int g, int t) const {
    switch (kind) {
      case Kind::scalar: return values[0];
      case Kind::per_cluster: return values[static_cast<std::size_t>(g)];
      case Kind::per_time: return values[static_cast<std::size_t>(t)];
      case Kind::per_cluster_time:
        return values[static_cast<std::size_t>(g) * T + t];
    }
    return 0.0;
  }

  std::vector<double> row(int g) const {
    std::vector<double> out(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) out[static_cast<std::size_t>(t)] = (*this)(g, t);
    return out;
  }
};

// Central sequences and precisions of the non-noise components. For models
// with a noise component, thetas.size() == G - 1 and the noise density is the
// uniform one.
struct ComponentParams {
  std::vector<std::vector<std::uint8_t>> thetas;
  PrecisionStructure precision;
};

enum class GatingMode { equal_shares, free_proportions, covariate };

// GN lets covariates drive the noise component like any other; NGN keeps the
// noise probability constant. Meaningful only when the model type has a noise
// component and covariates are present.
enum class NoiseGating { none, gated, nongated };

struct GatingConfig {
  GatingMode mode = GatingMode::free_proportions;
  std::vector<std::string> covariates;  // source covariate group names
  NoiseGating noise = NoiseGating::none;
};

struct Control {
  double tol = 1e-8;
  int max_iter = 1000;
  std::uint64_t seed = 0;
  double tau0_init = 0.05;
  double lambda_max = 1e3;
  double ridge = 1e-8;
  int mlr_max_iter = 100;
  int threads = 1;
};

struct ModelSpec {
  ModelType type = ModelType::CC;
  int G = 1;  // total components, noise included
  GatingConfig gating;
  Control control;

  int non_noise() const { return G - (has_noise(type) ? 1 : 0); }
};

std::string to_string(GatingMode m);
std::string to_string(NoiseGating n);
GatingMode gating_mode_from_string(const std::string& name);
NoiseGating noise_gating_from_string(const std::string& name);

}  // namespace seqmix
