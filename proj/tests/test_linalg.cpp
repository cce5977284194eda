#include <catch2/catch_amalgamated.hpp>

#include "sdprune/linalg.hpp"
#include "sdprune/rng.hpp"

using namespace sdprune;

namespace {

DenseMatrix random_symmetric(std::size_t n, Rng& rng) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
  return a;
}

double reconstruction_error(const DenseMatrix& a, const EigenDecomposition& ed) {
  const std::size_t n = a.rows();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += ed.eigenvectors(i, k) * ed.eigenvalues[k] * ed.eigenvectors(j, k);
      err = std::max(err, std::abs(s - a(i, j)));
    }
  return err;
}

// truncated Taylor series of exp(-h*t), the independent oracle
DenseMatrix taylor_exp(const DenseMatrix& h, double t, int terms) {
  const std::size_t n = h.rows();
  DenseMatrix acc = DenseMatrix::identity(n);
  DenseMatrix term = DenseMatrix::identity(n);
  for (int k = 1; k <= terms; ++k) {
    term = term.multiply(h);
    for (double& v : term.data()) v *= -t / k;
    for (std::size_t i = 0; i < n * n; ++i) acc.data()[i] += term.data()[i];
  }
  return acc;
}

}  // namespace

TEST_CASE("sym_eigen on the identity") {
  auto ed = sym_eigen(DenseMatrix::identity(3));
  for (double lam : ed.eigenvalues) CHECK(lam == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eigen sorts a diagonal matrix ascending") {
  auto ed = sym_eigen(DenseMatrix::diagonal({2.0, 0.0, -1.0}));
  CHECK(ed.eigenvalues[0] == Catch::Approx(-1.0).margin(1e-12));
  CHECK(ed.eigenvalues[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(ed.eigenvalues[2] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("sym_eigen reconstructs a random symmetric 5x5") {
  Rng rng(11);
  DenseMatrix a = random_symmetric(5, rng);
  auto ed = sym_eigen(a);
  double max_lam = 0.0;
  for (double l : ed.eigenvalues) max_lam = std::max(max_lam, std::abs(l));
  CHECK(reconstruction_error(a, ed) <= 1e-7 * std::max(1.0, max_lam));
}

TEST_CASE("sym_eigen reconstruction holds up to 50x50") {
  Rng rng(12);
  for (std::size_t n : {2u, 10u, 50u}) {
    DenseMatrix a = random_symmetric(n, rng);
    auto ed = sym_eigen(a);
    double max_lam = 0.0;
    for (double l : ed.eigenvalues) max_lam = std::max(max_lam, std::abs(l));
    CHECK(reconstruction_error(a, ed) <= 1e-7 * std::max(1.0, max_lam));
    // columns orthonormal
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += ed.eigenvectors(k, i) * ed.eigenvectors(k, j);
        CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) <= 1e-9);
      }
    // ascending order
    for (std::size_t k = 1; k < n; ++k) CHECK(ed.eigenvalues[k - 1] <= ed.eigenvalues[k]);
  }
}

TEST_CASE("sym_eigen rejects non-square and asymmetric input") {
  CHECK_THROWS_AS(sym_eigen(DenseMatrix(2, 3)), DimensionError);
  DenseMatrix a(2, 2);
  a(0, 1) = 1.0;
  a(1, 0) = -1.0;
  CHECK_THROWS_AS(sym_eigen(a), DimensionError);
}

TEST_CASE("matrix_exp_scaled on a diagonal") {
  auto m = matrix_exp_scaled(DenseMatrix::diagonal({1.0, 0.0}), 2.0);
  CHECK(m(0, 0) == Catch::Approx(std::exp(-2.0)).margin(1e-12));
  CHECK(m(1, 1) == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(m(0, 1)) <= 1e-12);
}

TEST_CASE("matrix_exp_scaled at t=0 is the identity") {
  Rng rng(13);
  DenseMatrix h = random_symmetric(4, rng);
  auto m = matrix_exp_scaled(h, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(m(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-12);
}

TEST_CASE("matrix_exp_scaled matches a 20-term Taylor series") {
  Rng rng(14);
  DenseMatrix h = random_symmetric(4, rng);
  auto m = matrix_exp_scaled(h, 0.3);
  auto ref = taylor_exp(h, 0.3, 20);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(m(i, j) - ref(i, j)) <= 1e-8);
}

TEST_CASE("matrix_exp_scaled semigroup property") {
  Rng rng(15);
  DenseMatrix h = random_symmetric(5, rng);
  auto lhs = matrix_exp_scaled(h, 0.7);
  auto rhs = matrix_exp_scaled(h, 0.3).multiply(matrix_exp_scaled(h, 0.4));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(lhs(i, j) - rhs(i, j)) <= 1e-8);
}

TEST_CASE("orthonormalize_pair on axis-aligned inputs") {
  auto [e1, e2] = orthonormalize_pair({1.0, 0.0}, {0.0, 2.0});
  CHECK(e1 == Vec{1.0, 0.0});
  CHECK(e2[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(e2[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("orthonormalize_pair runs one Gram-Schmidt step") {
  auto [e1, e2] = orthonormalize_pair({1.0, 0.0}, {1.0, 1.0});
  CHECK(e1 == Vec{1.0, 0.0});
  CHECK(e2[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(e2[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("orthonormalize_pair output is orthonormal for random input") {
  Rng rng(16);
  Vec u(10), v(10);
  for (double& x : u) x = rng.normal();
  for (double& x : v) x = rng.normal();
  auto [e1, e2] = orthonormalize_pair(u, v);
  CHECK(std::abs(norm2(e1) - 1.0) <= 1e-12);
  CHECK(std::abs(norm2(e2) - 1.0) <= 1e-12);
  CHECK(std::abs(dot(e1, e2)) <= 1e-12);
}

TEST_CASE("orthonormalize_pair rejects near-parallel input") {
  CHECK_THROWS_AS(orthonormalize_pair({1.0, 1.0}, {2.0, 2.0}), NumericError);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(999), b(999);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("rng derived seeds differ by label") {
  CHECK(Rng::derive(1, "data") != Rng::derive(1, "init"));
  CHECK(Rng::derive(1, "data") == Rng::derive(1, "data"));
  CHECK(Rng::derive(1, "data") != Rng::derive(2, "data"));
}
