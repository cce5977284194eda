#include <catch2/catch_amalgamated.hpp>

#include "sdprune/prox.hpp"

using namespace sdprune;

namespace {

ProxProblem make(Vec w, double lambda_s) { return ProxProblem{std::move(w), 1.0, lambda_s}; }

}  // namespace

TEST_CASE("group_prox closed-form cases on (3,4)") {
  CHECK(group_prox(make({3, 4}, 0.0)) == Vec{3, 4});       // s = 0: identity
  CHECK(group_prox(make({3, 4}, 5.0)) == Vec{0, 0});       // clamp boundary
  Vec half = group_prox(make({3, 4}, 2.5));
  CHECK(half[0] == Catch::Approx(1.5).margin(1e-15));
  CHECK(half[1] == Catch::Approx(2.0).margin(1e-15));
  Vec grown = group_prox(make({3, 4}, -2.5));               // s < 0 grows the group
  CHECK(grown[0] == Catch::Approx(4.5).margin(1e-15));
  CHECK(grown[1] == Catch::Approx(6.0).margin(1e-15));
}

TEST_CASE("group_prox is total") {
  CHECK(group_prox(make({0, 0, 0}, 1.0)) == Vec{0, 0, 0});
  CHECK(group_prox(make({3, 4}, 7.0)) == Vec{0, 0});  // past the clamp
}

TEST_CASE("brute-force oracle recovers w* when s=0") {
  Vec r = brute_force_prox(make({3, 4}, 0.0), 100000);
  CHECK(norm2(sub(r, {3, 4})) <= 1e-9);
}

TEST_CASE("brute-force oracle rejects a zero w*") {
  CHECK_THROWS_AS(brute_force_prox(make({0, 0}, 1.0)), ConfigError);
}

TEST_CASE("oracle matches the closed form at the default grid") {
  Vec a = group_prox(make({3, 4}, 2.5));
  Vec b = brute_force_prox(make({3, 4}, 2.5));  // default 10^6-point grid
  CHECK(norm2(sub(a, b)) <= 1e-6 * 6.0);
}

TEST_CASE("oracle equivalence over random problems of all signs") {
  Rng rng(41);
  for (int k = 0; k < 500; ++k) {
    std::size_t dim = 1 + rng.below(20);
    ProxProblem p;
    p.w_star.resize(dim);
    for (double& v : p.w_star) v = rng.normal();
    double n = norm2(p.w_star);
    if (n == 0.0) continue;
    p.lambda = 1.0;
    p.s = (k % 25 == 0) ? 0.0 : rng.uniform(-3.0 * n, 3.0 * n);
    Vec closed = group_prox(p);
    Vec brute = brute_force_prox(p, 20000);
    REQUIRE(norm2(sub(closed, brute)) <= 1e-6 * (1.0 + n));
  }
}

TEST_CASE("output is colinear with w*") {
  Rng rng(42);
  for (int k = 0; k < 200; ++k) {
    ProxProblem p;
    p.w_star = {rng.normal(), rng.normal(), rng.normal()};
    double n = norm2(p.w_star);
    p.s = rng.uniform(-2.0 * n, 2.0 * n);
    Vec out = group_prox(p);
    double factor = std::max(1.0 - p.s / n, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(std::abs(out[i] - factor * p.w_star[i]) <= 1e-12 * (1.0 + n));
    if (p.s < 0.0) CHECK(factor >= 1.0);
  }
}

TEST_CASE("convex case output beats random perturbations") {
  Rng rng(43);
  ProxProblem p;
  p.w_star = {1.0, -2.0, 0.5};
  p.s = 1.2;
  Vec opt = group_prox(p);
  double f_opt = prox_objective(p, opt);
  for (int k = 0; k < 1000; ++k) {
    Vec x = opt;
    for (double& v : x) v += 0.5 * rng.normal();
    CHECK(f_opt <= prox_objective(p, x) + 1e-12);
  }
}

TEST_CASE("exact zero iff lambda*s reaches the group norm") {
  ProxProblem p;
  p.w_star = {3, 4};
  p.lambda = 1.0;
  p.s = 5.0;
  CHECK(group_prox(p) == Vec{0, 0});
  p.s = 4.9999;
  CHECK(norm2(group_prox(p)) > 0.0);
}

TEST_CASE("stationary values reproduce the hand computation") {
  auto [f1, f2] = stationary_values(make({3, 4}, -2.5));
  CHECK(f1 == Catch::Approx(-15.625).margin(1e-12));
  CHECK(f2 == Catch::Approx(-3.125).margin(1e-12));
  CHECK(f1 < f2);
}

TEST_CASE("stationary points sit at symmetric offsets from w*") {
  ProxProblem p = make({3, 4}, -2.5);
  double n = norm2(p.w_star);
  Vec sp1 = scaled(p.w_star, 1.0 - p.lambda * p.s / n);
  Vec sp2 = scaled(p.w_star, 1.0 + p.lambda * p.s / n);
  CHECK(std::abs(norm2(sp1) - n) == Catch::Approx(2.5).margin(1e-12));
  CHECK(std::abs(norm2(sp2) - n) == Catch::Approx(2.5).margin(1e-12));
}

TEST_CASE("stationary_values requires s < 0") {
  CHECK_THROWS_AS(stationary_values(make({3, 4}, 1.0)), ConfigError);
}

TEST_CASE("larger-norm stationary point wins on random negative-s problems") {
  Rng rng(44);
  for (int k = 0; k < 2000; ++k) {
    ProxProblem p;
    p.w_star = {rng.normal(), rng.normal()};
    double n = norm2(p.w_star);
    if (n < 1e-6) continue;
    p.s = -rng.uniform(0.01, 3.0) * n;
    auto [f1, f2] = stationary_values(p);
    REQUIRE(f1 < f2);
  }
}

TEST_CASE("multi-start oracle confirms colinearity in low dims") {
  Rng rng(45);
  for (std::size_t dim = 1; dim <= 3; ++dim) {
    for (int k = 0; k < 5; ++k) {
      ProxProblem p;
      p.w_star.resize(dim);
      for (double& v : p.w_star) v = rng.normal();
      double n = norm2(p.w_star);
      if (n < 1e-3) continue;
      p.s = rng.uniform(-1.5 * n, 1.5 * n);
      Vec rng_copy_input = multistart_prox(p, rng);
      Vec closed = group_prox(p);
      CHECK(prox_objective(p, closed) <= prox_objective(p, rng_copy_input) + 1e-6);
    }
  }
}
