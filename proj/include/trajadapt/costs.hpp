#pragma once

#include <Eigen/Core>
#include <vector>

#include "trajadapt/kinematics.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt {

enum class TaskKind { boundary_configs, waypoint_track };

// A tracked end-effector waypoint: the trajectory's t-th configuration should
// place the end effector at x.
struct TrackedPoint {
  int t = 0;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
};

// Task parameter set. As a flat differentiated vector p:
//   boundary_configs -> concat(q_start, q_end), dim 2n
//   waypoint_track   -> concat of tracked targets in list order, dim 3*|tracked|
// The desired orientation o_d is held fixed (not part of p).
struct TaskParameters {
  TaskKind kind = TaskKind::boundary_configs;

  // boundary_configs
  Eigen::VectorXd q_start;
  Eigen::VectorXd q_end;

  // waypoint_track; indices strictly increasing, within [0, m)
  std::vector<TrackedPoint> tracked;

  Eigen::Vector3d o_d = Eigen::Vector3d::Zero();
  // Per-axis weights on the (roll, pitch, yaw) error channels. The default
  // leaves yaw free.
  Eigen::Vector3d orientation_axis_weights = Eigen::Vector3d(1.0, 1.0, 0.0);

  static TaskParameters boundary(Eigen::VectorXd q_start, Eigen::VectorXd q_end,
                                 Eigen::Vector3d o_d,
                                 Eigen::Vector3d axis_weights = Eigen::Vector3d(1, 1, 0));
  static TaskParameters tracking(std::vector<TrackedPoint> tracked, Eigen::Vector3d o_d,
                                 Eigen::Vector3d axis_weights = Eigen::Vector3d(1, 1, 0));

  int param_dim() const;
  Eigen::VectorXd flat() const;
  // Same structure with the flat parameter values replaced.
  TaskParameters with_flat(const Eigen::VectorXd& p) const;

  void validate(int m, int n) const;
};

struct CostWeights {
  Eigen::Vector3d smooth = Eigen::Vector3d(1.0, 1.0, 1.0);  // per difference order
  double boundary = 1.0;
  double orient = 1.0;
  double track = 1.0;
};

struct DerivativeRequest {
  bool gradient = true;
  bool hessian = true;
  bool mixed = true;
};

struct DerivativeBundle {
  double value = 0.0;
  Eigen::VectorXd gradient;  // dim xi
  Eigen::MatrixXd hessian;   // dim xi x dim xi, symmetric
  Eigen::MatrixXd mixed;     // dim xi x dim p
};

// Interpolation-between-configurations cost:
//   w.smooth * f_s + w.boundary * (||q_1 - q_start||^2 + ||q_m - q_end||^2)
//                  + w.orient * sum_t ||wrap(o_e(q_t) - o_d)||^2_W
double boundary_interpolation_cost(const DecisionVector& xi, const TaskParameters& p,
                                   const RobotModel& model, const CostWeights& w);

// Waypoint-tracking cost:
//   w.smooth * f_s + w.orient * sum_t ||wrap(o_e(q_t) - o_d)||^2_W
//                  + w.track * sum_{tracked} ||x_e(q_t) - x_d||^2
double waypoint_tracking_cost(const DecisionVector& xi, const TaskParameters& p,
                              const RobotModel& model, const CostWeights& w);

// Dispatch on p.kind.
double total_cost(const DecisionVector& xi, const TaskParameters& p, const RobotModel& model,
                  const CostWeights& w);

// Exact derivatives of total_cost at (xi, p): gradient and Hessian in xi and
// the mixed block d^2 f / (dxi dp). FK-dependent terms go through
// second-order forward-mode AD; the quadratic terms are assembled directly.
DerivativeBundle derivatives(const DecisionVector& xi, const TaskParameters& p,
                             const RobotModel& model, const CostWeights& w,
                             const DerivativeRequest& req = {});

}  // namespace trajadapt
