#include "trajadapt/costs.hpp"

#include <string>

#include "trajadapt/dual2.hpp"

namespace trajadapt {

TaskParameters TaskParameters::boundary(Eigen::VectorXd q_start, Eigen::VectorXd q_end,
                                        Eigen::Vector3d o_d, Eigen::Vector3d axis_weights) {
  TaskParameters p;
  p.kind = TaskKind::boundary_configs;
  p.q_start = std::move(q_start);
  p.q_end = std::move(q_end);
  p.o_d = std::move(o_d);
  p.orientation_axis_weights = std::move(axis_weights);
  return p;
}

TaskParameters TaskParameters::tracking(std::vector<TrackedPoint> tracked, Eigen::Vector3d o_d,
                                        Eigen::Vector3d axis_weights) {
  TaskParameters p;
  p.kind = TaskKind::waypoint_track;
  p.tracked = std::move(tracked);
  p.o_d = std::move(o_d);
  p.orientation_axis_weights = std::move(axis_weights);
  return p;
}

int TaskParameters::param_dim() const {
  if (kind == TaskKind::boundary_configs)
    return static_cast<int>(q_start.size() + q_end.size());
  return 3 * static_cast<int>(tracked.size());
}

Eigen::VectorXd TaskParameters::flat() const {
  Eigen::VectorXd p(param_dim());
  if (kind == TaskKind::boundary_configs) {
    p << q_start, q_end;
  } else {
    for (size_t i = 0; i < tracked.size(); ++i) p.segment(3 * static_cast<int>(i), 3) = tracked[i].x;
  }
  return p;
}

TaskParameters TaskParameters::with_flat(const Eigen::VectorXd& p) const {
  if (p.size() != param_dim())
    throw DimensionError("TaskParameters::with_flat: expected dim " +
                         std::to_string(param_dim()) + ", got " + std::to_string(p.size()));
  TaskParameters out = *this;
  if (kind == TaskKind::boundary_configs) {
    const int n = static_cast<int>(q_start.size());
    out.q_start = p.head(n);
    out.q_end = p.tail(static_cast<int>(q_end.size()));
  } else {
    for (size_t i = 0; i < tracked.size(); ++i)
      out.tracked[i].x = p.segment(3 * static_cast<int>(i), 3);
  }
  return out;
}

void TaskParameters::validate(int m, int n) const {
  for (int i = 0; i < 3; ++i)
    if (orientation_axis_weights(i) < 0.0)
      throw ValidationError("TaskParameters: orientation axis weights must be >= 0");
  if (kind == TaskKind::boundary_configs) {
    if (q_start.size() != n || q_end.size() != n)
      throw DimensionError("TaskParameters: boundary configurations must have length n");
  } else {
    int prev = -1;
    for (const auto& tp : tracked) {
      if (tp.t < 0 || tp.t >= m)
        throw ValidationError("TaskParameters: tracked index " + std::to_string(tp.t) +
                              " out of range [0, " + std::to_string(m) + ")");
      if (tp.t <= prev)
        throw ValidationError("TaskParameters: tracked indices must be strictly increasing");
      prev = tp.t;
    }
  }
}

namespace {

void check_kind(const TaskParameters& p, TaskKind expected, const char* fn) {
  if (p.kind != expected)
    throw ValidationError(std::string(fn) + ": wrong task-parameter kind for this cost");
}

double orientation_term(const DecisionVector& xi, const TaskParameters& p,
                        const RobotModel& model) {
  double acc = 0.0;
  for (int t = 0; t < xi.m; ++t) {
    const Pose pose = forward_kinematics(model, xi.waypoint(t));
    for (int i = 0; i < 3; ++i) {
      const double e = angle_diff(pose.rpy(i), p.o_d(i));
      acc += p.orientation_axis_weights(i) * e * e;
    }
  }
  return acc;
}

// Evaluates one waypoint's FK-dependent cost contribution in Dual2 arithmetic
// and returns the scalar term plus the position Jacobian (needed for the
// mixed block of tracking costs).
struct WaypointTerm {
  Dual2 term;                      // w_orient * orientation + w_track * tracking
  Eigen::Matrix<double, 3, Eigen::Dynamic> pos_jacobian;  // 3 x n
  bool has_tracking = false;
};

WaypointTerm waypoint_fk_term(const RobotModel& model, const Eigen::VectorXd& q,
                              const TaskParameters& p, const CostWeights& w, int t,
                              const Eigen::Vector3d* track_target) {
  const int n = static_cast<int>(q.size());
  std::vector<Dual2> qd;
  qd.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) qd.push_back(Dual2::variable(q(i), n, i));

  const Dual2 zero(0.0, n), one(1.0, n);
  const TMat4<Dual2> fk = chain_transform(model, qd, zero, one);

  WaypointTerm out;
  out.term = zero;

  if (w.orient > 0.0) {
    const auto rpy = euler_zyx(fk);
    // At gimbal lock the Euler derivatives blow up (or go non-finite); flag
    // the waypoint instead of poisoning the Hessian.
    if (std::abs(M_PI_2 - std::abs(rpy[1].v)) <= 1e-9)
      throw NumericError("orientation term degenerate (gimbal lock) at waypoint t=" +
                         std::to_string(t));
    for (int i = 0; i < 3; ++i) {
      const double axis_w = p.orientation_axis_weights(i);
      if (axis_w == 0.0) continue;
      Dual2 e = rpy[static_cast<size_t>(i)];
      // The wrap is locally an identity-plus-constant, so shift only the value.
      e.v = angle_diff(e.v, p.o_d(i));
      out.term += (w.orient * axis_w) * square(e);
    }
  }

  if (track_target != nullptr) {
    out.has_tracking = true;
    out.pos_jacobian.resize(3, n);
    for (int i = 0; i < 3; ++i) {
      Dual2 e = fk(i, 3);
      out.pos_jacobian.row(i) = e.g.transpose();
      e.v -= (*track_target)(i);
      out.term += w.track * square(e);
    }
  } else if (w.orient <= 0.0) {
    // Nothing FK-dependent at this waypoint.
    return out;
  }

  if (!out.term.all_finite())
    throw NumericError("cost derivatives non-finite at waypoint t=" + std::to_string(t) +
                       " (gimbal-lock orientation term?)");
  return out;
}

}  // namespace

double boundary_interpolation_cost(const DecisionVector& xi, const TaskParameters& p,
                                   const RobotModel& model, const CostWeights& w) {
  check_kind(p, TaskKind::boundary_configs, "boundary_interpolation_cost");
  p.validate(xi.m, xi.n);
  double cost = smoothness_cost(xi, w.smooth);
  cost += w.boundary * ((xi.waypoint(0) - p.q_start).squaredNorm() +
                        (xi.waypoint(xi.m - 1) - p.q_end).squaredNorm());
  if (w.orient > 0.0) cost += w.orient * orientation_term(xi, p, model);
  return cost;
}

double waypoint_tracking_cost(const DecisionVector& xi, const TaskParameters& p,
                              const RobotModel& model, const CostWeights& w) {
  check_kind(p, TaskKind::waypoint_track, "waypoint_tracking_cost");
  p.validate(xi.m, xi.n);
  double cost = smoothness_cost(xi, w.smooth);
  if (w.orient > 0.0) cost += w.orient * orientation_term(xi, p, model);
  for (const auto& tp : p.tracked) {
    const Eigen::Matrix4d t = fk_transform(model, xi.waypoint(tp.t));
    cost += w.track * (t.block<3, 1>(0, 3) - tp.x).squaredNorm();
  }
  return cost;
}

double total_cost(const DecisionVector& xi, const TaskParameters& p, const RobotModel& model,
                  const CostWeights& w) {
  return p.kind == TaskKind::boundary_configs ? boundary_interpolation_cost(xi, p, model, w)
                                              : waypoint_tracking_cost(xi, p, model, w);
}

DerivativeBundle derivatives(const DecisionVector& xi, const TaskParameters& p,
                             const RobotModel& model, const CostWeights& w,
                             const DerivativeRequest& req) {
  p.validate(xi.m, xi.n);
  const int dim = xi.dim();
  const int n = xi.n;
  const int pdim = p.param_dim();

  DerivativeBundle out;
  out.value = 0.0;
  if (req.gradient) out.gradient = Eigen::VectorXd::Zero(dim);
  if (req.hessian) out.hessian = Eigen::MatrixXd::Zero(dim, dim);
  if (req.mixed) out.mixed = Eigen::MatrixXd::Zero(dim, pdim);

  // Smoothness: exact quadratic form, f = 0.5 xi^T H_s xi.
  const Eigen::MatrixXd hs = smoothness_hessian(xi.m, n, w.smooth);
  out.value += smoothness_cost(xi, w.smooth);
  if (req.gradient) out.gradient += hs * xi.data;
  if (req.hessian) out.hessian += hs;

  // Boundary quadratic and its constant mixed blocks.
  if (p.kind == TaskKind::boundary_configs) {
    const Eigen::VectorXd e0 = xi.waypoint(0) - p.q_start;
    const Eigen::VectorXd em = xi.waypoint(xi.m - 1) - p.q_end;
    out.value += w.boundary * (e0.squaredNorm() + em.squaredNorm());
    if (req.gradient) {
      out.gradient.head(n) += 2.0 * w.boundary * e0;
      out.gradient.tail(n) += 2.0 * w.boundary * em;
    }
    if (req.hessian) {
      out.hessian.topLeftCorner(n, n) += 2.0 * w.boundary * Eigen::MatrixXd::Identity(n, n);
      out.hessian.bottomRightCorner(n, n) += 2.0 * w.boundary * Eigen::MatrixXd::Identity(n, n);
    }
    if (req.mixed) {
      out.mixed.block(0, 0, n, n) = -2.0 * w.boundary * Eigen::MatrixXd::Identity(n, n);
      out.mixed.block((xi.m - 1) * n, n, n, n) = -2.0 * w.boundary * Eigen::MatrixXd::Identity(n, n);
    }
  }

  // FK-dependent terms, one Dual2 pass per waypoint that needs one.
  std::vector<const Eigen::Vector3d*> target_of(static_cast<size_t>(xi.m), nullptr);
  std::vector<int> tracked_slot(static_cast<size_t>(xi.m), -1);
  if (p.kind == TaskKind::waypoint_track) {
    for (size_t i = 0; i < p.tracked.size(); ++i) {
      target_of[static_cast<size_t>(p.tracked[i].t)] = &p.tracked[i].x;
      tracked_slot[static_cast<size_t>(p.tracked[i].t)] = static_cast<int>(i);
    }
  }

  const bool want_orient = w.orient > 0.0;
  for (int t = 0; t < xi.m; ++t) {
    const bool tracked_here = target_of[static_cast<size_t>(t)] != nullptr && w.track > 0.0;
    if (!want_orient && !tracked_here) continue;
    const WaypointTerm wt = waypoint_fk_term(model, xi.waypoint(t), p, w, t,
                                             tracked_here ? target_of[static_cast<size_t>(t)] : nullptr);
    out.value += wt.term.v;
    if (req.gradient) out.gradient.segment(t * n, n) += wt.term.g;
    if (req.hessian) out.hessian.block(t * n, t * n, n, n) += wt.term.h;
    if (req.mixed && wt.has_tracking) {
      // d/dx_d of the tracking gradient 2 w (x_e - x_d)^T J is -2 w J^T.
      const int col = 3 * tracked_slot[static_cast<size_t>(t)];
      out.mixed.block(t * n, col, n, 3) = -2.0 * w.track * wt.pos_jacobian.transpose();
    }
  }

  if (req.hessian && !out.hessian.allFinite())
    throw NumericError("cost Hessian has non-finite entries");
  if (req.gradient && !out.gradient.allFinite())
    throw NumericError("cost gradient has non-finite entries");
  return out;
}

}  // namespace trajadapt
