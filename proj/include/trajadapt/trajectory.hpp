#pragma once

#include <Eigen/Core>

#include "trajadapt/errors.hpp"

namespace trajadapt {

// Waypoint-parameterized joint trajectory, flattened waypoint-major:
// data = (q_1, q_2, ..., q_m), each block of length n. Construction allows
// any m >= 1 so single-waypoint FK helpers work; the smoothness cost (and
// everything built on it) requires m >= 4 for third-order differences.
struct DecisionVector {
  Eigen::VectorXd data;
  int m = 0;  // waypoint count
  int n = 0;  // joint count

  DecisionVector() = default;
  DecisionVector(int m_, int n_) : data(Eigen::VectorXd::Zero(m_ * n_)), m(m_), n(n_) {
    if (m_ < 1 || n_ < 1) throw DimensionError("DecisionVector: m and n must be >= 1");
  }
  DecisionVector(Eigen::VectorXd flat, int m_, int n_) : data(std::move(flat)), m(m_), n(n_) {
    if (m_ < 1 || n_ < 1) throw DimensionError("DecisionVector: m and n must be >= 1");
    if (data.size() != static_cast<Eigen::Index>(m_) * n_)
      throw DimensionError("DecisionVector: flat size does not equal m*n");
    if (!data.allFinite()) throw ValidationError("DecisionVector: non-finite entries");
  }

  int dim() const { return m * n; }

  Eigen::VectorBlock<Eigen::VectorXd> waypoint(int t) { return data.segment(t * n, n); }
  Eigen::VectorBlock<const Eigen::VectorXd> waypoint(int t) const {
    return data.segment(t * n, n);
  }
};

// Joint limits tiled per waypoint.
struct BoxBounds {
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  BoxBounds() = default;
  BoxBounds(Eigen::VectorXd lb_, Eigen::VectorXd ub_) : lb(std::move(lb_)), ub(std::move(ub_)) {
    if (lb.size() != ub.size()) throw DimensionError("BoxBounds: lb/ub size mismatch");
    for (Eigen::Index i = 0; i < lb.size(); ++i)
      if (!(lb(i) < ub(i))) throw ValidationError("BoxBounds: lb must be < ub elementwise");
  }

  static BoxBounds tile(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int m) {
    const int n = static_cast<int>(lower.size());
    Eigen::VectorXd lb(m * n), ub(m * n);
    for (int t = 0; t < m; ++t) {
      lb.segment(t * n, n) = lower;
      ub.segment(t * n, n) = upper;
    }
    return BoxBounds(std::move(lb), std::move(ub));
  }
};

// Sum over k in {1,2,3} of w_k * sum_t ||Delta^k q_t||^2, forward differences
// over waypoints with unit time step. Requires m >= 4.
double smoothness_cost(const DecisionVector& xi, const Eigen::Vector3d& order_weights);

// First-order term alone (the velocity-smoothness metric uses it).
double smoothness_cost_order1(const DecisionVector& xi);

// Hessian of the smoothness cost: constant in xi, 2 * sum_k w_k (D_k^T D_k (x) I_n),
// dense (m*n x m*n). The gradient is hessian * xi.
Eigen::MatrixXd smoothness_hessian(int m, int n, const Eigen::Vector3d& order_weights);

// Elementwise clamp onto [lb, ub].
Eigen::VectorXd project(const Eigen::VectorXd& xi, const BoxBounds& b);
DecisionVector project(const DecisionVector& xi, const BoxBounds& b);

// Joint-space linear interpolation, m waypoints inclusive of both endpoints.
DecisionVector interpolate_seed(const Eigen::VectorXd& q_start, const Eigen::VectorXd& q_end,
                                int m);

}  // namespace trajadapt
