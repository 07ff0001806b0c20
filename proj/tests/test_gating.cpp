#include <doctest.h>

#include <cmath>

#include "seqmix/gating.hpp"
#include "seqmix/errors.hpp"
#include "support.hpp"

using namespace seqmix;

namespace {

GatingParams covariate_params(int G, const Eigen::MatrixXd& beta,
                              NoiseGating noise = NoiseGating::none, bool noise_component = false,
                              double tau0 = 0.0) {
  GatingParams p;
  p.mode = GatingMode::covariate;
  p.noise = noise;
  p.G = G;
  p.noise_component = noise_component;
  p.beta = beta;
  p.tau0 = tau0;
  return p;
}

}  // namespace

TEST_CASE("predict_tau basics") {
  SUBCASE("zero coefficients give uniform rows") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(5, 1);
    const auto tau = predict_tau(covariate_params(4, Eigen::MatrixXd::Zero(2, 4)), X);
    CHECK(tau.rows() == 5);
    for (int i = 0; i < 5; ++i)
      for (int g = 0; g < 4; ++g) CHECK(tau(i, g) == doctest::Approx(0.25));
  }
  SUBCASE("intercept-only softmax arithmetic") {
    const Eigen::MatrixXd X(3, 0);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, 2);
    auto tau = predict_tau(covariate_params(2, beta), X);
    CHECK(tau(0, 0) == doctest::Approx(0.5));
    beta(0, 1) = std::log(3.0);
    tau = predict_tau(covariate_params(2, beta), X);
    CHECK(tau(0, 0) == doctest::Approx(0.25));
    CHECK(tau(0, 1) == doctest::Approx(0.75));
  }
  SUBCASE("NGN keeps the noise probability constant") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(7, 2);
    const auto p = covariate_params(11, Eigen::MatrixXd::Zero(3, 10), NoiseGating::nongated, true,
                                    0.025);
    const auto tau = predict_tau(p, X);
    for (int i = 0; i < 7; ++i) {
      CHECK(tau(i, 10) == doctest::Approx(0.025));
      for (int g = 0; g < 10; ++g) CHECK(tau(i, g) == doctest::Approx(0.0975));
      CHECK(tau.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("rows are stochastic for random coefficients") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(20, 3);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Random(4, 5);
    beta.col(0).setZero();
    const auto tau = predict_tau(covariate_params(5, beta), X);
    for (int i = 0; i < 20; ++i) {
      CHECK(tau.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(tau.row(i).minCoeff() > 0.0);
    }
  }
  SUBCASE("adding a constant column vector leaves probabilities unchanged") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Random(3, 4);
    beta.col(0).setZero();
    const auto tau1 = predict_tau(covariate_params(4, beta), X);
    const Eigen::VectorXd shift = Eigen::VectorXd::Random(3);
    Eigen::MatrixXd shifted = beta;
    for (int g = 0; g < 4; ++g) shifted.col(g) += shift;
    const auto tau2 = predict_tau(covariate_params(4, shifted), X);
    CHECK((tau1 - tau2).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dimension mismatch is an error") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 3);
    CHECK_THROWS_AS(predict_tau(covariate_params(2, Eigen::MatrixXd::Zero(2, 2)), X), input_error);
  }
  SUBCASE("non-covariate modes broadcast tau") {
    GatingParams p;
    p.mode = GatingMode::free_proportions;
    p.G = 3;
    p.tau = Eigen::Vector3d(0.2, 0.3, 0.5);
    const auto tau = predict_tau(p, Eigen::MatrixXd(6, 0));
    CHECK(tau.rows() == 6);
    CHECK(tau(5, 2) == doctest::Approx(0.5));
  }
}

TEST_CASE("fit_mlr") {
  SUBCASE("identical response rows reproduce the shared distribution") {
    const int n = 30;
    const Eigen::MatrixXd X(n, 0);
    Eigen::MatrixXd R(n, 3);
    for (int i = 0; i < n; ++i) R.row(i) << 0.2, 0.5, 0.3;
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    const auto beta = fit_mlr(X, R, w);
    const auto tau = predict_tau(covariate_params(3, beta), X);
    CHECK(tau(0, 0) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(tau(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(tau(0, 2) == doctest::Approx(0.3).epsilon(1e-6));
  }
  SUBCASE("perfect separation drives fitted probabilities past 0.99") {
    const int n = 40;
    Eigen::MatrixXd X(n, 1);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = i % 2;
      R(i, i % 2) = 1.0;
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    const auto beta = fit_mlr(X, R, w, {}, 1e-6, 100);
    const auto tau = predict_tau(covariate_params(2, beta), X);
    for (int i = 0; i < n; ++i) CHECK(tau(i, i % 2) >= 0.99);
  }
  SUBCASE("objective never falls below the zero start on random fixtures") {
    auto gen = rng::engine(29);
    for (int rep = 0; rep < 50; ++rep) {
      const int n = 25, r = 2, G = 3;
      Eigen::MatrixXd X(n, r);
      Eigen::MatrixXd R(n, G);
      Eigen::VectorXd w(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < r; ++j) X(i, j) = 2.0 * rng::uniform01(gen) - 1.0;
        double total = 0.0;
        for (int g = 0; g < G; ++g) {
          R(i, g) = 0.01 + rng::uniform01(gen);
          total += R(i, g);
        }
        R.row(i) /= total;
        w[i] = 0.1 + rng::uniform01(gen);
      }
      const auto beta = fit_mlr(X, R, w);
      CHECK(mlr_objective(X, R, w, beta) >=
            mlr_objective(X, R, w, Eigen::MatrixXd::Zero(r + 1, G)) - 1e-12);
    }
  }
  SUBCASE("a rank-deficient design is reported") {
    const int n = 12;
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1);  // duplicates the intercept
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(n, 2, 0.5);
    CHECK_THROWS_AS(fit_mlr(X, R, Eigen::VectorXd::Ones(n)), input_error);
  }
  SUBCASE("warm start never loses ground") {
    const int n = 20;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, 1);
    Eigen::MatrixXd R(n, 2);
    for (int i = 0; i < n; ++i) {
      R(i, 0) = 0.3 + 0.4 * (i % 2);
      R(i, 1) = 1.0 - R(i, 0);
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(2, 2);
    warm(0, 1) = 0.4;
    const auto beta = fit_mlr(X, R, w, warm, 1e-8, 3);
    CHECK(mlr_objective(X, R, w, beta) >= mlr_objective(X, R, w, warm) - 1e-12);
  }
}

TEST_CASE("estimate_tau_free") {
  SUBCASE("uniform responsibilities") {
    const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(9, 3, 1.0 / 3);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(9);
    w[0] = 4.0;
    const auto tau = estimate_tau_free(R, w);
    for (int g = 0; g < 3; ++g) CHECK(tau[g] == doctest::Approx(1.0 / 3));
  }
  SUBCASE("hard counts") {
    Eigen::MatrixXd R(3, 2);
    R << 1, 0, 1, 0, 0, 1;
    const auto tau = estimate_tau_free(R, Eigen::VectorXd::Ones(3));
    CHECK(tau[0] == doctest::Approx(2.0 / 3));
    CHECK(tau[1] == doctest::Approx(1.0 / 3));
  }
  SUBCASE("random fixture against the direct weighted mean") {
    auto gen = rng::engine(57);
    const int n = 17, G = 4;
    Eigen::MatrixXd R(n, G);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      double total = 0.0;
      for (int g = 0; g < G; ++g) {
        R(i, g) = rng::uniform01(gen);
        total += R(i, g);
      }
      R.row(i) /= total;
      w[i] = 0.5 + rng::uniform01(gen);
    }
    const auto tau = estimate_tau_free(R, w);
    CHECK(tau.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int g = 0; g < G; ++g) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += R(i, g) * w[i];
      CHECK(tau[g] == doctest::Approx(acc / w.sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("update_gating handles noise settings") {
  ModelSpec spec;
  spec.type = ModelType::CCN;
  spec.G = 3;
  spec.control.seed = 1;

  Eigen::MatrixXd Z(4, 3);
  Z << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.7, 0.1, 0.2, 0.1, 0.7, 0.2;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  const Eigen::MatrixXd X0(4, 0);

  SUBCASE("equal shares with noise estimates tau0 only") {
    spec.gating.mode = GatingMode::equal_shares;
    GatingParams p;
    const auto out = update_gating(p, Z, X0, w, spec);
    const double tau0 = Z.col(2).dot(w) / w.sum();
    CHECK(out.tau[2] == doctest::Approx(tau0));
    CHECK(out.tau[0] == doctest::Approx((1 - tau0) / 2));
    CHECK(out.tau[0] == out.tau[1]);
  }
  SUBCASE("free proportions are weighted column means") {
    spec.gating.mode = GatingMode::free_proportions;
    GatingParams p;
    const auto out = update_gating(p, Z, X0, w, spec);
    CHECK(out.tau.sum() == doctest::Approx(1.0));
    CHECK(out.tau[0] == doctest::Approx(Z.col(0).mean()));
  }
  SUBCASE("NGN fit keeps noise constant and coefficients finite") {
    spec.gating.mode = GatingMode::covariate;
    spec.gating.noise = NoiseGating::nongated;
    spec.gating.covariates = {"x"};
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 0, 1;
    GatingParams p;
    p.beta = Eigen::MatrixXd::Zero(2, 2);
    const auto out = update_gating(p, Z, X, w, spec);
    const auto tau = predict_tau(out, X);
    for (int i = 0; i < 4; ++i) {
      CHECK(tau(i, 2) == doctest::Approx(out.tau0));
      CHECK(tau.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("two_step_coefficients") {
  SUBCASE("no signal gives near-zero slopes") {
    const int n = 40;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(n, 2, 0.5);
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = i % 2;
    const auto table =
        two_step_coefficients(Z, X, {"x"}, Eigen::VectorXd::Ones(n), false, ResponseKind::soft);
    CHECK(std::abs(table.beta(1, 1)) < 1e-6);
  }
  SUBCASE("soft responses recover known coefficients") {
    // responses generated exactly from a logistic model are recovered
    const int n = 200;
    Eigen::MatrixXd X(n, 1);
    Eigen::MatrixXd Z(n, 2);
    const double b0 = -0.4, b1 = 1.3;
    for (int i = 0; i < n; ++i) {
      X(i, 0) = (i % 5) / 2.0;
      const double eta = b0 + b1 * X(i, 0);
      const double p = 1.0 / (1.0 + std::exp(-eta));
      Z(i, 0) = 1.0 - p;
      Z(i, 1) = p;
    }
    const auto table =
        two_step_coefficients(Z, X, {"x"}, Eigen::VectorXd::Ones(n), false, ResponseKind::soft);
    CHECK(table.beta(0, 1) == doctest::Approx(b0).epsilon(1e-4));
    CHECK(table.beta(1, 1) == doctest::Approx(b1).epsilon(1e-4));
  }
  SUBCASE("noise column is renormalised away") {
    const int n = 60;
    Eigen::MatrixXd X(n, 1);
    Eigen::MatrixXd Z(n, 3);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = i % 2;
      const double p = i % 2 == 0 ? 0.72 : 0.18;  // non-noise split before noise share
      Z(i, 0) = p;
      Z(i, 1) = 0.9 - p;
      Z(i, 2) = 0.1;
    }
    const auto with_noise =
        two_step_coefficients(Z, X, {"x"}, Eigen::VectorXd::Ones(n), true, ResponseKind::soft);
    const Eigen::MatrixXd Zn = Z.leftCols(2) / 0.9;
    const auto renormalised =
        two_step_coefficients(Zn, X, {"x"}, Eigen::VectorXd::Ones(n), false, ResponseKind::soft);
    CHECK(with_noise.beta(1, 1) == doctest::Approx(renormalised.beta(1, 1)).epsilon(1e-10));
  }
  SUBCASE("MAP responses with an empty cluster raise") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(10, 2, 0.5);
    Z.col(0).setConstant(0.8);
    Z.col(1).setConstant(0.2);
    Eigen::MatrixXd X(10, 1);
    X.setZero();
    CHECK_THROWS_AS(
        two_step_coefficients(Z, X, {"x"}, Eigen::VectorXd::Ones(10), false, ResponseKind::map),
        estimation_error);
  }
}
