#include "seqmix/wlbs.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "seqmix/errors.hpp"
#include "seqmix/rng.hpp"

namespace seqmix {

BootstrapResult wlbs_se(const FittedModel& model, const SequenceDataset& ds, int B,
                        std::uint64_t seed, int threads) {
  if (B < 2) throw input_error("bootstrap needs B >= 2");
  if (!model.converged) throw input_error("bootstrap requires a converged fit");
  if (model.Z.rows() != ds.rows()) {
    throw input_error("bootstrap dataset does not match the fitted model");
  }

  // Covariate fits draw the MLR coefficient matrix; other gatings draw the
  // equivalent intercept-only representation log(tau_g / tau_1).
  const auto coefficients = [](const FittedModel& fitted) -> Eigen::MatrixXd {
    if (fitted.spec.gating.mode == GatingMode::covariate) return fitted.gating.beta;
    Eigen::MatrixXd beta(1, fitted.spec.G);
    for (int g = 0; g < fitted.spec.G; ++g) {
      beta(0, g) = std::log(fitted.gating.tau[g]) - std::log(fitted.gating.tau[0]);
    }
    return beta;
  };

  const int n = ds.rows();
  std::vector<Eigen::MatrixXd> draws(static_cast<std::size_t>(B));
  std::vector<char> ok(static_cast<std::size_t>(B), 0);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int b = next.fetch_add(1); b < B; b = next.fetch_add(1)) {
      auto gen = rng::engine(seed, 0x776c6273ULL + static_cast<std::uint64_t>(b));
      Eigen::VectorXd u(n);
      for (int i = 0; i < n; ++i) u[i] = rng::exponential(gen);
      u *= static_cast<double>(n) / u.sum();  // n * Dirichlet(1,...,1)

      const SequenceDataset replicate = ds.with_weights(ds.weights().cwiseProduct(u));
      try {
        FittedModel refit = fit_with_init(replicate, model.spec, model.Z);
        if (refit.converged) {
          draws[static_cast<std::size_t>(b)] = coefficients(refit);
          ok[static_cast<std::size_t>(b)] = 1;
        }
      } catch (const estimation_error&) {
        // dropped below
      }
    }
  };
  threads = std::max(1, std::min(threads, B));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BootstrapResult out;
  out.replicates = B;
  for (int b = 0; b < B; ++b) {
    if (ok[static_cast<std::size_t>(b)]) {
      out.draws.push_back(std::move(draws[static_cast<std::size_t>(b)]));
    } else {
      out.failed.push_back(b);
    }
  }
  const int m = static_cast<int>(out.draws.size());
  if (m < 2) throw estimation_error("fewer than 2 bootstrap replicates converged");

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(out.draws[0].rows(), out.draws[0].cols());
  for (const auto& d : out.draws) mean += d;
  mean /= m;
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  for (const auto& d : out.draws) ss += (d - mean).cwiseAbs2();
  out.se = (ss / (m - 1)).cwiseSqrt();
  return out;
}

}  // namespace seqmix
