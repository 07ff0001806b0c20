#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "seqmix/dataset.hpp"
#include "seqmix/ecm.hpp"

namespace seqmix {

struct BootstrapResult {
  int replicates = 0;  // requested B
  std::vector<Eigen::MatrixXd> draws;  // gating coefficients per successful replicate
  Eigen::MatrixXd se;                  // element-wise standard deviations
  std::vector<int> failed;             // replicate indices dropped for non-convergence
};

// Weighted likelihood bootstrap for the gating coefficients: each replicate
// multiplies the sampling weights by n times a symmetric uniform Dirichlet
// draw and refits the same specification, initialised from the original
// responsibilities so component labels stay aligned. Replicate b gets its own
// counter-derived generator, so results do not depend on execution order.
// Standard errors from stratified sampling designs are approximate.
BootstrapResult wlbs_se(const FittedModel& model, const SequenceDataset& ds, int B,
                        std::uint64_t seed, int threads = 1);

}  // namespace seqmix
