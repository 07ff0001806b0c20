#include "seqmix/model.hpp"

namespace seqmix {

std::string to_string(ModelType m) {
  switch (m) {
    case ModelType::CC: return "CC";
    case ModelType::UC: return "UC";
    case ModelType::CU: return "CU";
    case ModelType::UU: return "UU";
    case ModelType::CCN: return "CCN";
    case ModelType::UCN: return "UCN";
    case ModelType::CUN: return "CUN";
    case ModelType::UUN: return "UUN";
  }
  return "?";
}

ModelType model_type_from_string(const std::string& name) {
  for (ModelType m : all_model_types()) {
    if (to_string(m) == name) return m;
  }
  throw input_error("unknown model type '" + name + "'");
}

std::vector<ModelType> all_model_types() {
  return {ModelType::CC,  ModelType::UC,  ModelType::CU,  ModelType::UU,
          ModelType::CCN, ModelType::UCN, ModelType::CUN, ModelType::UUN};
}

PrecisionStructure PrecisionStructure::zeros(ModelType type, int non_noise, int T) {
  PrecisionStructure p;
  p.clusters = non_noise;
  p.T = T;
  const bool by_g = cluster_varying(type);
  const bool by_t = time_varying(type);
  if (by_g && by_t) {
    p.kind = Kind::per_cluster_time;
    p.values.assign(static_cast<std::size_t>(non_noise) * T, 0.0);
  } else if (by_g) {
    p.kind = Kind::per_cluster;
    p.values.assign(static_cast<std::size_t>(non_noise), 0.0);
  } else if (by_t) {
    p.kind = Kind::per_time;
    p.values.assign(static_cast<std::size_t>(T), 0.0);
  } else {
    p.kind = Kind::scalar;
    p.values.assign(1, 0.0);
  }
  return p;
}

std::string to_string(GatingMode m) {
  switch (m) {
    case GatingMode::equal_shares: return "equal";
    case GatingMode::free_proportions: return "free";
    case GatingMode::covariate: return "covariate";
  }
  return "?";
}

std::string to_string(NoiseGating n) {
  switch (n) {
    case NoiseGating::none: return "none";
    case NoiseGating::gated: return "GN";
    case NoiseGating::nongated: return "NGN";
  }
  return "?";
}

GatingMode gating_mode_from_string(const std::string& name) {
  if (name == "equal") return GatingMode::equal_shares;
  if (name == "free") return GatingMode::free_proportions;
  if (name == "covariate") return GatingMode::covariate;
  throw input_error("unknown gating mode '" + name + "'");
}

NoiseGating noise_gating_from_string(const std::string& name) {
  if (name == "none") return NoiseGating::none;
  if (name == "GN") return NoiseGating::gated;
  if (name == "NGN") return NoiseGating::nongated;
  throw input_error("unknown noise gating setting '" + name + "'");
}

}  // namespace seqmix
