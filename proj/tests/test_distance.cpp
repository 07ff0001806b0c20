#include <doctest.h>

#include <cmath>

#include "seqmix/distance.hpp"
#include "seqmix/errors.hpp"
#include "support.hpp"

using namespace seqmix;
using test_support::dataset_from_indices;

namespace {

std::vector<std::uint8_t> seq(std::initializer_list<int> xs) {
  std::vector<std::uint8_t> out;
  for (int x : xs) out.push_back(static_cast<std::uint8_t>(x));
  return out;
}

}  // namespace

TEST_CASE("hamming counts mismatching positions") {
  CHECK(hamming(seq({0, 1, 2}), seq({0, 1, 1})) == 1);
  CHECK(hamming(seq({0, 1, 2}), seq({0, 1, 2})) == 0);
  CHECK(hamming(seq({0, 0, 0, 0}), seq({1, 1, 1, 1})) == 4);
  CHECK_THROWS_AS(hamming(seq({0, 1}), seq({0})), input_error);
}

TEST_CASE("hamming metric axioms on random triples") {
  auto gen = rng::engine(3);
  for (int rep = 0; rep < 200; ++rep) {
    const int T = 1 + rng::uniform_int(gen, 12);
    const int v = 2 + rng::uniform_int(gen, 4);
    std::vector<std::uint8_t> a(T), b(T), c(T);
    for (int t = 0; t < T; ++t) {
      a[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, v));
      b[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, v));
      c[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, v));
    }
    CHECK(hamming(a, a) == 0);
    CHECK(hamming(a, b) == hamming(b, a));
    CHECK(hamming(a, c) <= hamming(a, b) + hamming(b, c));
  }
}

TEST_CASE("weighted_hamming sums rates over mismatches") {
  const std::vector<double> lambda{0.5, 1.0, 2.0};
  CHECK(weighted_hamming(seq({0, 1, 0}), seq({1, 1, 1}), lambda) == doctest::Approx(2.5));
  SUBCASE("unit rates reduce to hamming") {
    auto gen = rng::engine(5);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::uint8_t> a(6), b(6);
      for (int t = 0; t < 6; ++t) {
        a[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, 3));
        b[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, 3));
      }
      CHECK(weighted_hamming(a, b, std::vector<double>(6, 1.0)) == doctest::Approx(hamming(a, b)));
    }
  }
  SUBCASE("zero rates give zero") {
    CHECK(weighted_hamming(seq({0, 1}), seq({1, 0}), std::vector<double>(2, 0.0)) == 0.0);
  }
  SUBCASE("rate scaling is linear") {
    auto gen = rng::engine(17);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::uint8_t> a(5), b(5);
      std::vector<double> l(5);
      for (int t = 0; t < 5; ++t) {
        a[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, 3));
        b[t] = static_cast<std::uint8_t>(rng::uniform_int(gen, 3));
        l[t] = rng::uniform01(gen) * 2;
      }
      const double c = 0.1 + 3 * rng::uniform01(gen);
      std::vector<double> lc = l;
      for (auto& x : lc) x *= c;
      CHECK(weighted_hamming(a, b, lc) ==
            doctest::Approx(c * weighted_hamming(a, b, l)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(weighted_hamming(seq({0}), seq({1}), std::vector<double>{-0.5}), input_error);
}

TEST_CASE("pairwise_matrix") {
  SUBCASE("identical rows give zeros") {
    const auto ds = dataset_from_indices({{0, 1}, {0, 1}, {0, 1}}, 2);
    CHECK(pairwise_matrix(ds).cwiseAbs().sum() == 0);
  }
  SUBCASE("hand-counted example") {
    const auto ds = dataset_from_indices({{0, 1}, {0, 2}, {1, 2}}, 3);
    const auto D = pairwise_matrix(ds);
    CHECK(D(0, 1) == 1);
    CHECK(D(0, 2) == 2);
    CHECK(D(1, 2) == 1);
    CHECK(D(1, 0) == 1);
    CHECK(D.diagonal().cwiseAbs().sum() == 0);
  }
  SUBCASE("matches the naive double loop on a random fixture") {
    auto gen = rng::engine(23);
    const auto rows = test_support::random_rows(gen, 50, 20, 4);
    const auto ds = dataset_from_indices(rows, 4);
    const auto D = pairwise_matrix(ds);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        int d = 0;
        for (int t = 0; t < 20; ++t) d += rows[i][t] != rows[j][t];
        CHECK(D(i, j) == d);
      }
    }
  }
}

TEST_CASE("log_psi_hamming closed form") {
  CHECK(log_psi_hamming(0.0, 4, 3) == doctest::Approx(std::log(81.0)).epsilon(1e-14));
  SUBCASE("distance-count expansion at T=4, v=3") {
    for (double lambda : {0.0, 0.3, 1.0, 2.5, 10.0}) {
      const double e = std::exp(-lambda);
      const double direct =
          std::log(1 + 8 * e + 24 * e * e + 32 * e * e * e + 16 * e * e * e * e);
      CHECK(log_psi_hamming(lambda, 4, 3) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  SUBCASE("agrees with enumeration for any reference sequence") {
    const std::vector<double> lambda(3, 1.5);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        for (int c = 0; c < 2; ++c) {
          const auto theta = seq({a, b, c});
          CHECK(log_psi_hamming(1.5, 3, 2) ==
                doctest::Approx(enumerate_log_psi(lambda, 2, theta)).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("strictly decreasing in lambda") {
    double prev = log_psi_hamming(0.0, 5, 4);
    for (double lambda = 0.25; lambda < 6.0; lambda += 0.25) {
      const double cur = log_psi_hamming(lambda, 5, 4);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(log_psi_hamming(-0.1, 3, 2), input_error);
  CHECK_THROWS_AS(log_psi_hamming(0.1, 0, 2), input_error);
  CHECK_THROWS_AS(log_psi_hamming(0.1, 3, 1), input_error);
}

TEST_CASE("log_psi_weighted") {
  SUBCASE("zero rates give T log v") {
    CHECK(log_psi_weighted(std::vector<double>(5, 0.0), 3) ==
          doctest::Approx(5 * std::log(3.0)).epsilon(1e-14));
  }
  SUBCASE("constant rates reduce to the scalar form") {
    for (double lambda : {0.2, 1.0, 3.7}) {
      CHECK(log_psi_weighted(std::vector<double>(6, lambda), 4) ==
            doctest::Approx(log_psi_hamming(lambda, 6, 4)).epsilon(1e-14));
    }
  }
  SUBCASE("matches the enumeration oracle") {
    const std::vector<double> lambda{0.2, 1.0, 2.5};
    const auto theta = seq({0, 1, 2});
    CHECK(log_psi_weighted(lambda, 3) ==
          doctest::Approx(enumerate_log_psi(lambda, 3, theta)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(log_psi_weighted(std::vector<double>{0.5, -1.0}, 3), input_error);
}

TEST_CASE("closed form vs enumeration across small configurations") {
  auto gen = rng::engine(41);
  for (int rep = 0; rep < 60; ++rep) {
    const int T = 1 + rng::uniform_int(gen, 4);
    const int v = 2 + rng::uniform_int(gen, 3);
    std::vector<double> lambda(T);
    for (auto& l : lambda) l = 4.0 * rng::uniform01(gen);
    std::vector<std::uint8_t> theta(T);
    for (auto& s : theta) s = static_cast<std::uint8_t>(rng::uniform_int(gen, v));
    CHECK(std::abs(log_psi_weighted(lambda, v) - enumerate_log_psi(lambda, v, theta)) < 1e-10);
  }
}

TEST_CASE("enumerate_log_psi guard and base case") {
  CHECK(enumerate_log_psi(std::vector<double>{0.0}, 2, seq({0})) ==
        doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(enumerate_log_psi(std::vector<double>(30, 1.0), 6, std::vector<std::uint8_t>(30, 0)),
                  input_error);
}
