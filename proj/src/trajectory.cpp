#include "trajadapt/trajectory.hpp"

#include <array>

namespace trajadapt {

namespace {

// Forward-difference stencil coefficients for orders 1..3.
constexpr std::array<std::array<double, 4>, 3> kStencils = {{
    {-1.0, 1.0, 0.0, 0.0},
    {1.0, -2.0, 1.0, 0.0},
    {-1.0, 3.0, -3.0, 1.0},
}};

}  // namespace

double smoothness_cost(const DecisionVector& xi, const Eigen::Vector3d& order_weights) {
  if (xi.m < 4) throw DimensionError("smoothness_cost: need m >= 4 waypoints");
  double total = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const double w = order_weights(k - 1);
    if (w == 0.0) continue;
    double acc = 0.0;
    for (int t = 0; t + k < xi.m; ++t) {
      for (int j = 0; j < xi.n; ++j) {
        double d = 0.0;
        for (int s = 0; s <= k; ++s) d += kStencils[k - 1][s] * xi.data((t + s) * xi.n + j);
        acc += d * d;
      }
    }
    total += w * acc;
  }
  return total;
}

double smoothness_cost_order1(const DecisionVector& xi) {
  return smoothness_cost(xi, Eigen::Vector3d(1.0, 0.0, 0.0));
}

Eigen::MatrixXd smoothness_hessian(int m, int n, const Eigen::Vector3d& order_weights) {
  if (m < 4) throw DimensionError("smoothness_hessian: need m >= 4 waypoints");
  // Waypoint-index quadratic form sum_k w_k D_k^T D_k, then expanded over the
  // n joints of each waypoint block.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k <= 3; ++k) {
    const double w = order_weights(k - 1);
    if (w == 0.0) continue;
    for (int t = 0; t + k < m; ++t) {
      for (int a = 0; a <= k; ++a)
        for (int b = 0; b <= k; ++b)
          q(t + a, t + b) += w * kStencils[k - 1][a] * kStencils[k - 1][b];
    }
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int ta = 0; ta < m; ++ta)
    for (int tb = 0; tb < m; ++tb) {
      if (q(ta, tb) == 0.0) continue;
      for (int j = 0; j < n; ++j) h(ta * n + j, tb * n + j) = 2.0 * q(ta, tb);
    }
  return h;
}

Eigen::VectorXd project(const Eigen::VectorXd& xi, const BoxBounds& b) {
  if (xi.size() != b.lb.size()) throw DimensionError("project: dimension mismatch with bounds");
  return xi.cwiseMax(b.lb).cwiseMin(b.ub);
}

DecisionVector project(const DecisionVector& xi, const BoxBounds& b) {
  return DecisionVector(project(xi.data, b), xi.m, xi.n);
}

DecisionVector interpolate_seed(const Eigen::VectorXd& q_start, const Eigen::VectorXd& q_end,
                                int m) {
  if (q_start.size() != q_end.size())
    throw DimensionError("interpolate_seed: endpoint dimension mismatch");
  if (m < 4) throw DimensionError("interpolate_seed: need m >= 4 waypoints");
  const int n = static_cast<int>(q_start.size());
  DecisionVector xi(m, n);
  for (int t = 0; t < m; ++t) {
    const double s = static_cast<double>(t) / static_cast<double>(m - 1);
    xi.waypoint(t) = (1.0 - s) * q_start + s * q_end;
  }
  // Endpoints exactly equal the inputs regardless of rounding.
  xi.waypoint(0) = q_start;
  xi.waypoint(m - 1) = q_end;
  return xi;
}

}  // namespace trajadapt
