#include <catch2/catch_amalgamated.hpp>

#include "sdprune/analysis.hpp"
#include "sdprune/data_io.hpp"

using namespace sdprune;

namespace {

ModelSpec two_var_quadratic() {
  // loss(w) = (1/4)||Xw - y||^2 with X = I, y = (1, 1); H = 0.5 I
  ModelSpec m;
  m.kind = ModelKind::quadratic;
  m.quadratic_x = {{1.0, 0.0}, {0.0, 1.0}};
  m.quadratic_y = {1.0, 1.0};
  return m;
}

}  // namespace

TEST_CASE("theorem2 residual vanishes when c = 0") {
  ModelSpec m = two_var_quadratic();
  GroupPartition g = GroupPartition::singletons(2);
  auto series = theorem2_residual(m, Dataset{}, {2.0, 3.0}, g, 1e-2, 0.0, 0.6, 2.0);
  REQUIRE_FALSE(series.residual.empty());
  for (double r : series.residual) CHECK(r <= 1e-12);
}

TEST_CASE("theorem2 residual is finite and nonnegative with thresholding on") {
  ModelSpec m = two_var_quadratic();
  GroupPartition g = GroupPartition::singletons(2);
  auto series = theorem2_residual(m, Dataset{}, {2.0, 3.0}, g, 1e-2, 0.1, 0.6, 2.0);
  REQUIRE(series.t.size() == series.residual.size());
  for (std::size_t k = 0; k < series.t.size(); ++k) {
    CHECK(series.t[k] > 0.0);
    CHECK(std::isfinite(series.residual[k]));
    CHECK(series.residual[k] >= 0.0);
  }
}

TEST_CASE("theorem3 residual is small when c = 0") {
  // with no threshold the dual iterate is plain gradient descent, so the
  // residual is only the Euler-vs-flow discretization gap
  ModelSpec m = two_var_quadratic();
  GroupPartition g = GroupPartition::singletons(2);
  auto series = theorem3_deterministic_check(m, Dataset{}, {2.0, 2.0}, g, 1e-3, 0.0, 0.6, 1.0, 0.05);
  REQUIRE_FALSE(series.residual.empty());
  for (double r : series.residual) CHECK(r <= 1e-3);
}

TEST_CASE("theorem3 aborts when a coordinate crosses zero") {
  ModelSpec m;
  m.kind = ModelKind::quadratic;
  m.quadratic_x = {{1.0}};
  m.quadratic_y = {1.0};
  GroupPartition g = GroupPartition::whole(1);
  // w(t) = 1 - 2 exp(-t) crosses zero at t = ln 2
  CHECK_THROWS_AS(
      theorem3_deterministic_check(m, Dataset{}, {-1.0}, g, 1e-2, 0.01, 0.6, 2.0, 0.05),
      FixtureAbort);
}

TEST_CASE("theorem3 validates the stride") {
  ModelSpec m = two_var_quadratic();
  GroupPartition g = GroupPartition::whole(2);
  CHECK_THROWS_AS(theorem3_deterministic_check(m, Dataset{}, {1.0, 1.0}, g, 1e-2, 0.1, 0.6, 1.0, 0.0),
                  ConfigError);
}

TEST_CASE("angle series is zero for a whole-vector group") {
  GroupPartition g = GroupPartition::whole(3);
  Vec angles = angle_series({{1.0, 2.0, -2.0}, {0.5, 0.0, 0.1}}, g);
  REQUIRE(angles.size() == 2);
  CHECK(angles[0] == Catch::Approx(0.0).margin(1e-9));
  CHECK(angles[1] == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("angle series is zero for equal-magnitude singleton coordinates") {
  GroupPartition g = GroupPartition::singletons(3);
  Vec angles = angle_series({{2.0, -2.0, 2.0}}, g);
  CHECK(angles[0] == Catch::Approx(0.0).margin(1e-9));
  // unequal magnitudes tilt w away from its group-normalized direction
  Vec tilted = angle_series({{3.0, 0.1, 0.1}}, g);
  CHECK(tilted[0] > 1.0);
}

TEST_CASE("angle series marks a zero snapshot as NaN") {
  GroupPartition g = GroupPartition::whole(2);
  Vec angles = angle_series({{0.0, 0.0}}, g);
  CHECK(std::isnan(angles[0]));
}

TEST_CASE("untrained bezier with midpoint control is the chord") {
  // control = (a+b)/2 collapses the quadratic curve to the straight segment,
  // so on a convex loss the profile never exceeds the worse endpoint
  ModelSpec m = two_var_quadratic();
  Vec wa{0.0, 0.0}, wb{3.0, 1.0};
  auto res = bezier_connect(m, Dataset{}, wa, wb, 0, 0.1, 1, 11);
  REQUIRE(res.profile_tau.size() == 101);
  double end_max = std::max(full_loss(m, wa, Dataset{}), full_loss(m, wb, Dataset{}));
  CHECK(res.max_loss <= end_max + 1e-9);
  CHECK(res.profile_loss[0] == Catch::Approx(full_loss(m, wa, Dataset{})).margin(1e-12));
  CHECK(res.profile_loss[100] == Catch::Approx(full_loss(m, wb, Dataset{})).margin(1e-12));
}

TEST_CASE("bezier training moves only the control point") {
  ModelSpec m;
  m.kind = ModelKind::linear_regression;
  m.layer_sizes = {2, 1};
  m.loss = LossKind::mse;
  Dataset data;
  data.inputs = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  data.targets = {{1.0}, {2.0}, {3.0}};
  Vec wa{0.0, 0.0}, wb{2.0, 4.0};
  auto res = bezier_connect(m, data, wa, wb, 50, 0.05, 2, 7);
  CHECK(res.curve.a == wa);
  CHECK(res.curve.b == wb);
  CHECK(norm2(sub(res.curve.at(0.0), wa)) <= 1e-12);
  CHECK(norm2(sub(res.curve.at(1.0), wb)) <= 1e-12);
  CHECK(all_finite(res.curve.control));
  // convex problem: the trained path should not be worse than the chord
  auto chord = bezier_connect(m, data, wa, wb, 0, 0.05, 2, 7);
  CHECK(res.max_loss <= chord.max_loss + 1e-6);
}

TEST_CASE("bezier rejects mismatched endpoints") {
  ModelSpec m = two_var_quadratic();
  CHECK_THROWS_AS(bezier_connect(m, Dataset{}, {1.0, 2.0}, {1.0}, 0, 0.1, 1, 1), DimensionError);
}

TEST_CASE("plane contour reproduces the anchor coordinates") {
  ModelSpec m;
  m.kind = ModelKind::quadratic;
  m.quadratic_x = {{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 0.5}};
  m.quadratic_y = {1.0, -1.0, 0.0};
  Vec w1{0.0, 0.0, 0.0}, w2{1.0, 1.0, 0.0}, w3{0.0, 1.0, 2.0};
  auto grid = plane_contour(m, Dataset{}, w1, w2, w3, 5, 7);
  // anchor 2 reconstructed from its plane coordinates
  Vec p2 = grid.origin;
  axpy(grid.u2, grid.axis_u, p2);
  axpy(grid.v2, grid.axis_v, p2);
  CHECK(norm2(sub(p2, w2)) <= 1e-9);
  Vec p3 = grid.origin;
  axpy(grid.u3, grid.axis_u, p3);
  axpy(grid.v3, grid.axis_v, p3);
  CHECK(norm2(sub(p3, w3)) <= 1e-9);
  // every grid value matches the closed-form quadratic loss at its point
  REQUIRE(grid.u_coords.size() == 5);
  REQUIRE(grid.v_coords.size() == 7);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      Vec p = grid.origin;
      axpy(grid.u_coords[i], grid.axis_u, p);
      axpy(grid.v_coords[j], grid.axis_v, p);
      double acc = 0.0;
      for (std::size_t r = 0; r < m.quadratic_x.size(); ++r) {
        double e = dot(m.quadratic_x[r], p) - m.quadratic_y[r];
        acc += e * e;
      }
      CHECK(grid.losses(i, j) == Catch::Approx(acc / 6.0).margin(1e-9));
    }
}

TEST_CASE("plane contour grid covers the triangle with margin") {
  ModelSpec m = two_var_quadratic();
  auto grid = plane_contour(m, Dataset{}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 3, 3);
  CHECK(grid.u_coords.front() < std::min({0.0, grid.u2, grid.u3}));
  CHECK(grid.u_coords.back() > std::max({0.0, grid.u2, grid.u3}));
  CHECK_FALSE(grid.test_errors.has_value());
}

TEST_CASE("plane contour rejects degenerate anchors and tiny grids") {
  ModelSpec m;
  m.kind = ModelKind::quadratic;
  m.quadratic_x = {{1.0, 0.0, 0.0}};
  m.quadratic_y = {1.0};
  Vec w1{0.0, 0.0, 0.0}, w2{1.0, 1.0, 0.0};
  Vec w3{2.0, 2.0, 0.0};  // colinear with w1, w2
  CHECK_THROWS_AS(plane_contour(m, Dataset{}, w1, w2, w3, 5, 5), ConfigError);
  CHECK_THROWS_AS(plane_contour(m, Dataset{}, w1, w2, {0.0, 1.0, 2.0}, 1, 5), ConfigError);
}

TEST_CASE("plane contour fills test errors for classification data") {
  Dataset train = make_two_moons(31, 20, 0.1);
  Dataset test = make_two_moons(32, 20, 0.1);
  ModelSpec m;
  m.kind = ModelKind::mlp;
  m.layer_sizes = {2, 3, 2};
  m.loss = LossKind::softmax_cross_entropy;
  Vec w1 = random_init(m, 1), w2 = random_init(m, 2), w3 = random_init(m, 3);
  auto grid = plane_contour(m, train, w1, w2, w3, 3, 3, 0.2, &test);
  REQUIRE(grid.test_errors.has_value());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK((*grid.test_errors)(i, j) >= 0.0);
      CHECK((*grid.test_errors)(i, j) <= 1.0);
    }
}

TEST_CASE("flops reduction hand computation on a 4-4-2 network") {
  // dense: 2*4*4 + 2*4*2 = 48; pruning hidden units 0,1: 2*4*2 + 2*2*2 = 24
  CHECK(flops_reduction({4, 4, 2}, {{0, 1}, {}}) == Catch::Approx(0.5).margin(1e-12));
  CHECK(flops_reduction({4, 4, 2}, {{}, {}}) == 0.0);
}

TEST_CASE("flops reduction grows with each extra pruned unit") {
  double prev = -1.0;
  std::vector<std::size_t> pruned;
  for (std::size_t u = 0; u < 3; ++u) {
    double r = flops_reduction({4, 4, 2}, {pruned, {}});
    CHECK(r > prev);
    prev = r;
    pruned.push_back(u);
  }
}

TEST_CASE("flops reduction rejects invalid prune sets") {
  CHECK_THROWS_AS(flops_reduction({4, 4, 2}, {{}, {0}}), ConfigError);          // output unit
  CHECK_THROWS_AS(flops_reduction({4, 4, 2}, {{0, 1, 2, 3}, {}}), ConfigError); // whole layer
  CHECK_THROWS_AS(flops_reduction({4, 4, 2}, {{7}, {}}), ConfigError);          // out of range
  CHECK_THROWS_AS(flops_reduction({4, 4, 2}, {{}}), DimensionError);            // list count
  CHECK_THROWS_AS(flops_reduction({4}, {}), ConfigError);                       // no layers
}
