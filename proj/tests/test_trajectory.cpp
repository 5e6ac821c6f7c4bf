#include <doctest.h>

#include <random>

#include "test_helpers.hpp"
#include "trajadapt/trajectory.hpp"

using namespace trajadapt;
using test_helpers::random_trajectory;
using test_helpers::random_vector;

namespace {

// Quadratic-form oracle: assembles the difference matrices D_k explicitly and
// evaluates xi^T (sum_k w_k D_k^T D_k (x) I_n) xi, a separate code path from
// the library's stencil loops.
double smoothness_oracle(const DecisionVector& xi, const Eigen::Vector3d& w) {
  double total = 0.0;
  for (int k = 1; k <= 3; ++k) {
    if (w(k - 1) == 0.0) continue;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(xi.m - k, xi.m);
    for (int r = 0; r < xi.m - k; ++r) {
      for (int s = 0; s <= k; ++s) {
        // (Delta^k q)_t = sum_s (-1)^(k-s) C(k,s) q_{t+s}
        double binom = 1.0;
        for (int j = 0; j < s; ++j) binom = binom * (k - j) / (j + 1.0);
        const double sign = ((k - s) % 2 == 0) ? 1.0 : -1.0;
        d(r, r + s) = sign * binom;
      }
    }
    Eigen::MatrixXd q = d.transpose() * d;
    for (int j = 0; j < xi.n; ++j) {
      Eigen::VectorXd col(xi.m);
      for (int t = 0; t < xi.m; ++t) col(t) = xi.data(t * xi.n + j);
      total += w(k - 1) * col.dot(q * col);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("constant trajectory has zero smoothness cost") {
  DecisionVector xi(6, 2);
  for (int t = 0; t < 6; ++t) xi.waypoint(t) = Eigen::Vector2d(0.3, -1.1);
  CHECK(smoothness_cost(xi, Eigen::Vector3d(1, 1, 1)) == doctest::Approx(0.0));
}

TEST_CASE("linear ramp exposes only the first-order term") {
  const int m = 7, n = 2;
  const Eigen::Vector2d v(0.25, -0.5);
  DecisionVector xi(m, n);
  for (int t = 0; t < m; ++t) xi.waypoint(t) = static_cast<double>(t) * v;
  CHECK(smoothness_cost(xi, Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx((m - 1) * v.squaredNorm()));
  CHECK(smoothness_cost(xi, Eigen::Vector3d(0, 1, 0)) == doctest::Approx(0.0));
  CHECK(smoothness_cost(xi, Eigen::Vector3d(0, 0, 1)) == doctest::Approx(0.0));
  CHECK(smoothness_cost(xi, Eigen::Vector3d(1, 1, 1)) ==
        doctest::Approx((m - 1) * v.squaredNorm()));
}

TEST_CASE("smoothness cost matches the difference-matrix oracle") {
  std::mt19937_64 eng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 6, 2);
    const Eigen::Vector3d w(0.7, 1.3, 0.4);
    CHECK(smoothness_cost(xi, w) ==
          doctest::Approx(smoothness_oracle(xi, w)).epsilon(1e-12));
  }
}

TEST_CASE("smoothness hessian reproduces the cost as a quadratic form") {
  std::mt19937_64 eng(11);
  const int m = 8, n = 3;
  const Eigen::Vector3d w(1.0, 0.5, 0.25);
  const Eigen::MatrixXd h = smoothness_hessian(m, n, w);
  CHECK((h - h.transpose()).norm() == doctest::Approx(0.0));
  for (int trial = 0; trial < 10; ++trial) {
    const DecisionVector xi = random_trajectory(eng, m, n);
    CHECK(0.5 * xi.data.dot(h * xi.data) ==
          doctest::Approx(smoothness_cost(xi, w)).epsilon(1e-12));
  }
}

TEST_CASE("smoothness needs at least four waypoints") {
  DecisionVector xi(3, 2);
  CHECK_THROWS_AS(smoothness_cost(xi, Eigen::Vector3d(1, 1, 1)), DimensionError);
}

TEST_CASE("smoothness cost ignores constant offsets") {
  std::mt19937_64 eng(12);
  const DecisionVector xi = random_trajectory(eng, 6, 3);
  DecisionVector shifted = xi;
  const Eigen::Vector3d offset(0.4, -0.2, 1.0);
  for (int t = 0; t < xi.m; ++t) shifted.waypoint(t) += offset;
  const Eigen::Vector3d w(1, 1, 1);
  CHECK(smoothness_cost(shifted, w) == doctest::Approx(smoothness_cost(xi, w)).epsilon(1e-10));
}

TEST_CASE("projection clamps and is idempotent") {
  std::mt19937_64 eng(13);
  const int dim = 12;
  BoxBounds b(Eigen::VectorXd::Constant(dim, -1.0), Eigen::VectorXd::Constant(dim, 1.0));

  Eigen::VectorXd inside = random_vector(eng, dim, -0.9, 0.9);
  CHECK((project(inside, b) - inside).norm() == doctest::Approx(0.0));

  Eigen::VectorXd out = inside;
  out(3) = 1.5;  // ub + 0.5
  const Eigen::VectorXd clamped = project(out, b);
  CHECK(clamped(3) == doctest::Approx(1.0));

  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = random_vector(eng, dim, -3.0, 3.0);
    const Eigen::VectorXd once = project(x, b);
    CHECK((project(once, b) - once).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("projection never increases distance to feasible points") {
  std::mt19937_64 eng(14);
  const int dim = 8;
  BoxBounds b(Eigen::VectorXd::Constant(dim, -1.0), Eigen::VectorXd::Constant(dim, 1.0));
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = random_vector(eng, dim, -4.0, 4.0);
    const Eigen::VectorXd feasible = random_vector(eng, dim, -1.0, 1.0);
    CHECK((project(x, b) - feasible).norm() <= (x - feasible).norm() + 1e-12);
  }
}

TEST_CASE("interpolate_seed endpoints and spacing") {
  Eigen::VectorXd a(1), z(1);
  a << 0.0;
  z << 1.0;
  const DecisionVector xi = interpolate_seed(a, z, 5);
  for (int t = 0; t < 5; ++t) CHECK(xi.data(t) == doctest::Approx(0.25 * t));

  std::mt19937_64 eng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd qs = random_vector(eng, 4, -2.0, 2.0);
    const Eigen::VectorXd qe = random_vector(eng, 4, -2.0, 2.0);
    const DecisionVector traj = interpolate_seed(qs, qe, 9);
    CHECK((traj.waypoint(0) - qs).norm() == doctest::Approx(0.0));
    CHECK((traj.waypoint(8) - qe).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("interpolate_seed with equal endpoints is constant") {
  Eigen::VectorXd q(3);
  q << 0.5, -0.25, 1.0;
  const DecisionVector xi = interpolate_seed(q, q, 6);
  for (int t = 0; t < 6; ++t) CHECK((xi.waypoint(t) - q).norm() == doctest::Approx(0.0));
}

TEST_CASE("interpolate_seed rejects mismatched endpoints") {
  CHECK_THROWS_AS(interpolate_seed(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), 5),
                  DimensionError);
}

TEST_CASE("decision vector validates shape and finiteness") {
  CHECK_THROWS_AS(DecisionVector(Eigen::VectorXd::Zero(5), 2, 2), DimensionError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
  bad(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DecisionVector(bad, 2, 2), ValidationError);
}

TEST_CASE("box bounds validate ordering") {
  CHECK_THROWS_AS(BoxBounds(Eigen::VectorXd::Constant(3, 1.0), Eigen::VectorXd::Constant(3, 1.0)),
                  ValidationError);
}
