#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "trajadapt/costs.hpp"

namespace trajadapt {

// Parametric objective f(xi, p) with the pieces the solver and the adapter
// need: cost, derivatives, and the forward roll mapping a trajectory to the
// task parameters it actually achieves.
class ParametricProblem {
 public:
  virtual ~ParametricProblem() = default;

  virtual int xi_dim() const = 0;
  virtual int p_dim() const = 0;

  virtual double cost(const Eigen::VectorXd& xi, const Eigen::VectorXd& p) const = 0;
  virtual DerivativeBundle derivatives(const Eigen::VectorXd& xi, const Eigen::VectorXd& p,
                                       const DerivativeRequest& req) const = 0;
  virtual Eigen::VectorXd forward_roll(const Eigen::VectorXd& xi) const = 0;
};

// The task-constrained trajectory objective. Holds the parameter structure
// (kind, tracked indices, o_d, axis weights); the flat vector p supplies the
// varying values.
class TaskProblem : public ParametricProblem {
 public:
  TaskProblem(const RobotModel& model, CostWeights weights, TaskParameters structure, int m)
      : model_(model), weights_(std::move(weights)), structure_(std::move(structure)), m_(m) {
    structure_.validate(m_, model_.dof());
  }

  int xi_dim() const override { return m_ * model_.dof(); }
  int p_dim() const override { return structure_.param_dim(); }
  int waypoints() const { return m_; }
  const RobotModel& model() const { return model_; }
  const CostWeights& weights() const { return weights_; }
  const TaskParameters& structure() const { return structure_; }

  DecisionVector wrap(const Eigen::VectorXd& xi) const {
    return DecisionVector(xi, m_, model_.dof());
  }

  double cost(const Eigen::VectorXd& xi, const Eigen::VectorXd& p) const override {
    return total_cost(wrap(xi), structure_.with_flat(p), model_, weights_);
  }

  DerivativeBundle derivatives(const Eigen::VectorXd& xi, const Eigen::VectorXd& p,
                               const DerivativeRequest& req) const override {
    return trajadapt::derivatives(wrap(xi), structure_.with_flat(p), model_, weights_, req);
  }

  // Achieved parameters: boundary configurations read off the trajectory, or
  // the end-effector position at each tracked waypoint.
  Eigen::VectorXd forward_roll(const Eigen::VectorXd& xi) const override {
    const DecisionVector traj = wrap(xi);
    const int n = model_.dof();
    Eigen::VectorXd achieved(p_dim());
    if (structure_.kind == TaskKind::boundary_configs) {
      achieved.head(n) = traj.waypoint(0);
      achieved.tail(n) = traj.waypoint(m_ - 1);
    } else {
      for (size_t i = 0; i < structure_.tracked.size(); ++i) {
        const Eigen::Matrix4d t = fk_transform(model_, traj.waypoint(structure_.tracked[i].t));
        achieved.segment(3 * static_cast<int>(i), 3) = t.block<3, 1>(0, 3);
      }
    }
    return achieved;
  }

 private:
  const RobotModel& model_;
  CostWeights weights_;
  TaskParameters structure_;
  int m_;
};

// Model-free quadratic hook used by self-checks and tests:
//   f(xi, p) = 0.5 xi^T A xi - (B p)^T xi
// with A symmetric positive definite. The optimum is xi*(p) = A^{-1} B p and
// the exact sensitivity is A^{-1} B.
class QuadraticProblem : public ParametricProblem {
 public:
  explicit QuadraticProblem(Eigen::MatrixXd a)
      : QuadraticProblem(std::move(a), Eigen::MatrixXd()) {}

  QuadraticProblem(Eigen::MatrixXd a, Eigen::MatrixXd b) : a_(std::move(a)), b_(std::move(b)) {
    if (b_.size() == 0) b_ = Eigen::MatrixXd::Identity(a_.rows(), a_.cols());
    if (a_.rows() != a_.cols() || b_.rows() != a_.rows())
      throw DimensionError("QuadraticProblem: A must be square and B row-conformal");
    a_llt_.compute(a_);
  }

  int xi_dim() const override { return static_cast<int>(a_.rows()); }
  int p_dim() const override { return static_cast<int>(b_.cols()); }

  double cost(const Eigen::VectorXd& xi, const Eigen::VectorXd& p) const override {
    return 0.5 * xi.dot(a_ * xi) - (b_ * p).dot(xi);
  }

  DerivativeBundle derivatives(const Eigen::VectorXd& xi, const Eigen::VectorXd& p,
                               const DerivativeRequest& req) const override {
    DerivativeBundle out;
    out.value = cost(xi, p);
    if (req.gradient) out.gradient = a_ * xi - b_ * p;
    if (req.hessian) out.hessian = a_;
    if (req.mixed) out.mixed = -b_;
    return out;
  }

  // The p for which xi is stationary; needs B square (true for the hook).
  Eigen::VectorXd forward_roll(const Eigen::VectorXd& xi) const override {
    if (b_.rows() != b_.cols())
      throw DimensionError("QuadraticProblem::forward_roll: B must be square");
    return b_.colPivHouseholderQr().solve(a_ * xi);
  }

  Eigen::VectorXd minimizer(const Eigen::VectorXd& p) const { return a_llt_.solve(b_ * p); }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  Eigen::LLT<Eigen::MatrixXd> a_llt_;
};

}  // namespace trajadapt
