#include <doctest.h>

#include <Eigen/Geometry>
#include <random>

#include "test_helpers.hpp"
#include "trajadapt/costs.hpp"
#include "trajadapt/problem.hpp"

using namespace trajadapt;
using test_helpers::fk_oracle;
using test_helpers::planar_model;
using test_helpers::random_trajectory;
using test_helpers::random_vector;

namespace {

// Term-by-term cost oracle built from the independent FK oracle, an
// asin-based Euler extraction and explicit difference loops.
double cost_oracle(const DecisionVector& xi, const TaskParameters& p, const RobotModel& model,
                   const CostWeights& w) {
  double c = 0.0;
  const std::array<std::array<double, 4>, 3> stencils = {{
      {-1, 1, 0, 0}, {1, -2, 1, 0}, {-1, 3, -3, 1}}};
  for (int k = 1; k <= 3; ++k)
    for (int t = 0; t + k < xi.m; ++t)
      for (int j = 0; j < xi.n; ++j) {
        double d = 0.0;
        for (int s = 0; s <= k; ++s) d += stencils[k - 1][s] * xi.data((t + s) * xi.n + j);
        c += w.smooth(k - 1) * d * d;
      }
  if (p.kind == TaskKind::boundary_configs) {
    c += w.boundary * (xi.waypoint(0) - p.q_start).squaredNorm();
    c += w.boundary * (xi.waypoint(xi.m - 1) - p.q_end).squaredNorm();
  }
  for (int t = 0; t < xi.m; ++t) {
    const Eigen::Matrix4d fk = fk_oracle(model, xi.waypoint(t));
    const double roll = std::atan2(fk(2, 1), fk(2, 2));
    const double pitch = std::asin(std::clamp(-fk(2, 0), -1.0, 1.0));
    const double yaw = std::atan2(fk(1, 0), fk(0, 0));
    const Eigen::Vector3d rpy(roll, pitch, yaw);
    for (int i = 0; i < 3; ++i) {
      const double e = wrap_angle(rpy(i) - p.o_d(i));
      c += w.orient * p.orientation_axis_weights(i) * e * e;
    }
  }
  if (p.kind == TaskKind::waypoint_track) {
    for (const auto& tp : p.tracked) {
      const Eigen::Matrix4d fk = fk_oracle(model, xi.waypoint(tp.t));
      c += w.track * (fk.block<3, 1>(0, 3) - tp.x).squaredNorm();
    }
  }
  return c;
}

TaskParameters random_boundary_params(std::mt19937_64& eng, int n) {
  return TaskParameters::boundary(random_vector(eng, n, -0.8, 0.8),
                                  random_vector(eng, n, -0.8, 0.8),
                                  Eigen::Vector3d(0.0, 0.0, 0.3),
                                  Eigen::Vector3d(1.0, 1.0, 0.5));
}

TaskParameters random_tracking_params(std::mt19937_64& eng, int m) {
  std::vector<TrackedPoint> tracked;
  tracked.push_back({0, Eigen::Vector3d(2.5, 0.3, 0.0)});
  tracked.push_back({m / 2, Eigen::Vector3d(1.8, 1.2, 0.0)});
  tracked.push_back({m - 1, Eigen::Vector3d(1.0, 2.0, 0.0)});
  for (auto& tp : tracked) tp.x += random_vector(eng, 3, -0.2, 0.2);
  return TaskParameters::tracking(std::move(tracked), Eigen::Vector3d(0.0, 0.0, 0.1),
                                  Eigen::Vector3d(1.0, 1.0, 0.25));
}

}  // namespace

TEST_CASE("boundary cost vanishes on a self-consistent constant trajectory") {
  const RobotModel model = planar_model(3);
  Eigen::VectorXd q(3);
  q << 0.4, -0.2, 0.7;
  const Pose pose = forward_kinematics(model, q);
  DecisionVector xi(6, 3);
  for (int t = 0; t < 6; ++t) xi.waypoint(t) = q;
  const TaskParameters p =
      TaskParameters::boundary(q, q, pose.rpy, Eigen::Vector3d(1, 1, 1));
  CHECK(boundary_interpolation_cost(xi, p, model, CostWeights{}) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("perturbing q_start by delta adds exactly w_boundary * |delta|^2") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(20);
  const DecisionVector xi = random_trajectory(eng, 6, 3);
  CostWeights w;
  w.boundary = 2.5;
  TaskParameters p = random_boundary_params(eng, 3);
  p.q_start = xi.waypoint(0);  // start term initially zero
  const double base = boundary_interpolation_cost(xi, p, model, w);
  const Eigen::VectorXd delta = random_vector(eng, 3, -0.3, 0.3);
  TaskParameters p2 = p;
  p2.q_start = p.q_start + delta;
  const double perturbed = boundary_interpolation_cost(xi, p2, model, w);
  CHECK(perturbed - base == doctest::Approx(w.boundary * delta.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("boundary cost matches the term-by-term oracle") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 8, 3);
    const TaskParameters p = random_boundary_params(eng, 3);
    CostWeights w;
    w.smooth = Eigen::Vector3d(0.8, 1.1, 0.6);
    w.boundary = 1.7;
    w.orient = 0.9;
    const double lib = boundary_interpolation_cost(xi, p, model, w);
    CHECK(lib == doctest::Approx(cost_oracle(xi, p, model, w)).epsilon(1e-12));
  }
}

TEST_CASE("tracking cost with empty tracked set reduces to smoothness + orientation") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(22);
  const DecisionVector xi = random_trajectory(eng, 6, 3);
  TaskParameters p = TaskParameters::tracking({}, Eigen::Vector3d(0, 0, 0.2),
                                              Eigen::Vector3d(1, 1, 1));
  CostWeights w;
  const double lib = waypoint_tracking_cost(xi, p, model, w);
  CHECK(lib == doctest::Approx(cost_oracle(xi, p, model, w)).epsilon(1e-12));
  CostWeights w2 = w;
  w2.track = 123.0;  // no tracked points, so the weight must not matter
  CHECK(waypoint_tracking_cost(xi, p, model, w2) == doctest::Approx(lib));
}

TEST_CASE("self-consistent targets zero the tracking term") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(23);
  const DecisionVector xi = random_trajectory(eng, 6, 3);
  TaskParameters p = random_tracking_params(eng, 6);
  for (auto& tp : p.tracked) tp.x = forward_kinematics(model, xi.waypoint(tp.t)).position;
  CostWeights w_on, w_off;
  w_on.track = 5.0;
  w_off.track = 0.0;
  CHECK(waypoint_tracking_cost(xi, p, model, w_on) ==
        doctest::Approx(waypoint_tracking_cost(xi, p, model, w_off)).epsilon(1e-13));
}

TEST_CASE("tracking cost matches the oracle") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 8, 3);
    const TaskParameters p = random_tracking_params(eng, 8);
    CostWeights w;
    w.smooth = Eigen::Vector3d(1.2, 0.4, 0.9);
    w.orient = 1.4;
    w.track = 2.2;
    CHECK(waypoint_tracking_cost(xi, p, model, w) ==
          doctest::Approx(cost_oracle(xi, p, model, w)).epsilon(1e-12));
  }
}

TEST_CASE("total_cost dispatches on the parameter kind") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(25);
  const CostWeights w;
  for (int trial = 0; trial < 100; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 6, 3);
    if (trial % 2 == 0) {
      const TaskParameters p = random_boundary_params(eng, 3);
      CHECK(total_cost(xi, p, model, w) ==
            doctest::Approx(boundary_interpolation_cost(xi, p, model, w)));
      CHECK_THROWS_AS(waypoint_tracking_cost(xi, p, model, w), ValidationError);
    } else {
      const TaskParameters p = random_tracking_params(eng, 6);
      CHECK(total_cost(xi, p, model, w) ==
            doctest::Approx(waypoint_tracking_cost(xi, p, model, w)));
      CHECK_THROWS_AS(boundary_interpolation_cost(xi, p, model, w), ValidationError);
    }
  }
}

TEST_CASE("tracked index out of range is rejected") {
  const RobotModel model = planar_model(3);
  DecisionVector xi(5, 3);
  TaskParameters p =
      TaskParameters::tracking({{7, Eigen::Vector3d::Zero()}}, Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(waypoint_tracking_cost(xi, p, model, CostWeights{}), ValidationError);
}

TEST_CASE("quadratic hook derivatives match the closed form") {
  std::mt19937_64 eng(26);
  const int d = 5;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
  a = (a * a.transpose() + 2.0 * Eigen::MatrixXd::Identity(d, d)).eval();
  QuadraticProblem prob(a);
  const Eigen::VectorXd xi = random_vector(eng, d, -1, 1);
  const Eigen::VectorXd p = random_vector(eng, d, -1, 1);
  const DerivativeBundle b = prob.derivatives(xi, p, {true, true, true});
  CHECK((b.gradient - (a * xi - p)).norm() == doctest::Approx(0.0));
  CHECK((b.hessian - a).norm() == doctest::Approx(0.0));
  CHECK((b.mixed + Eigen::MatrixXd::Identity(d, d)).norm() == doctest::Approx(0.0));
  CHECK(b.value == doctest::Approx(0.5 * xi.dot(a * xi) - p.dot(xi)));
}

TEST_CASE("gradient matches central finite differences") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(27);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 6, 3);
    const TaskParameters p = trial % 2 == 0 ? random_boundary_params(eng, 3)
                                            : random_tracking_params(eng, 6);
    CostWeights w;
    const DerivativeBundle b = derivatives(xi, p, model, w, {true, false, false});
    for (int i = 0; i < xi.dim(); ++i) {
      DecisionVector hi = xi, lo = xi;
      hi.data(i) += h;
      lo.data(i) -= h;
      const double fd = (total_cost(hi, p, model, w) - total_cost(lo, p, model, w)) / (2 * h);
      CHECK(std::abs(b.gradient(i) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("hessian is symmetric and matches gradient finite differences") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(28);
  const double h = 1e-5;
  for (int trial = 0; trial < 6; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 5, 3);
    const TaskParameters p = trial % 2 == 0 ? random_boundary_params(eng, 3)
                                            : random_tracking_params(eng, 5);
    CostWeights w;
    const DerivativeBundle b = derivatives(xi, p, model, w, {true, true, false});
    CHECK((b.hessian - b.hessian.transpose()).norm() / b.hessian.norm() <= 1e-9);
    for (int i = 0; i < xi.dim(); ++i) {
      DecisionVector hi = xi, lo = xi;
      hi.data(i) += h;
      lo.data(i) -= h;
      const Eigen::VectorXd ghi = derivatives(hi, p, model, w, {true, false, false}).gradient;
      const Eigen::VectorXd glo = derivatives(lo, p, model, w, {true, false, false}).gradient;
      const Eigen::VectorXd fd = (ghi - glo) / (2 * h);
      CHECK((b.hessian.col(i) - fd).lpNorm<Eigen::Infinity>() <
            1e-4 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("boundary mixed matrix has exactly two -2wI blocks") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(29);
  const DecisionVector xi = random_trajectory(eng, 7, 3);
  const TaskParameters p = random_boundary_params(eng, 3);
  CostWeights w;
  w.boundary = 1.9;
  const DerivativeBundle b = derivatives(xi, p, model, w, {false, false, true});
  REQUIRE(b.mixed.rows() == 21);
  REQUIRE(b.mixed.cols() == 6);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(21, 6);
  expected.block(0, 0, 3, 3) = -2.0 * w.boundary * Eigen::Matrix3d::Identity();
  expected.block(18, 3, 3, 3) = -2.0 * w.boundary * Eigen::Matrix3d::Identity();
  CHECK((b.mixed - expected).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("mixed matrix matches finite differences in p") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(30);
  const double h = 1e-6;
  for (int trial = 0; trial < 6; ++trial) {
    const DecisionVector xi = random_trajectory(eng, 5, 3);
    const TaskParameters p = trial % 2 == 0 ? random_boundary_params(eng, 3)
                                            : random_tracking_params(eng, 5);
    CostWeights w;
    const DerivativeBundle b = derivatives(xi, p, model, w, {false, false, true});
    const Eigen::VectorXd p_flat = p.flat();
    for (int j = 0; j < p.param_dim(); ++j) {
      Eigen::VectorXd hi = p_flat, lo = p_flat;
      hi(j) += h;
      lo(j) -= h;
      const Eigen::VectorXd ghi =
          derivatives(xi, p.with_flat(hi), model, w, {true, false, false}).gradient;
      const Eigen::VectorXd glo =
          derivatives(xi, p.with_flat(lo), model, w, {true, false, false}).gradient;
      const Eigen::VectorXd fd = (ghi - glo) / (2 * h);
      CHECK((b.mixed.col(j) - fd).lpNorm<Eigen::Infinity>() <
            1e-4 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("tracking hessian is block-banded with bandwidth three waypoints") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(31);
  const int m = 8, n = 3;
  const DecisionVector xi = random_trajectory(eng, m, n);
  const TaskParameters p = random_tracking_params(eng, m);
  const DerivativeBundle b = derivatives(xi, p, model, CostWeights{}, {false, true, false});
  for (int ta = 0; ta < m; ++ta)
    for (int tb = 0; tb < m; ++tb) {
      if (std::abs(ta - tb) <= 3) continue;
      CHECK(b.hessian.block(ta * n, tb * n, n, n).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("yaw-free weights make the cost independent of o_d yaw") {
  const RobotModel model = planar_model(3);
  std::mt19937_64 eng(32);
  const DecisionVector xi = random_trajectory(eng, 6, 3);
  TaskParameters p = random_boundary_params(eng, 3);
  p.orientation_axis_weights = Eigen::Vector3d(1, 1, 0);
  const double before = total_cost(xi, p, model, CostWeights{});
  p.o_d(2) += 1.234;
  CHECK(total_cost(xi, p, model, CostWeights{}) == doctest::Approx(before));
}

TEST_CASE("gimbal lock in the orientation derivative names the waypoint") {
  RobotModel model;
  model.name = "lockable";
  model.convention = DHConvention::classic;
  model.joints = {DHRow{0.0, 0.0, 0.0, 0.0}};
  model.lower_limits = Eigen::VectorXd::Constant(1, -M_PI);
  model.upper_limits = Eigen::VectorXd::Constant(1, M_PI);
  // Base rotation puts the joint axis along world x, so q = 0 pitches the end
  // effector straight into the lock.
  model.base_transform.block<3, 3>(0, 0) =
      Eigen::AngleAxisd(M_PI_2, Eigen::Vector3d::UnitY()).toRotationMatrix();

  DecisionVector xi(4, 1);
  xi.data << 0.5, 0.4, 0.0, 0.2;  // waypoint 2 is locked
  const TaskParameters p = TaskParameters::boundary(
      Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::Vector3d::Zero(),
      Eigen::Vector3d(1, 1, 0));
  try {
    derivatives(xi, p, model, CostWeights{}, {true, true, false});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("t=2") != std::string::npos);
  }
}
