#pragma once

#include <Eigen/Core>
#include <vector>

#include "trajadapt/problem.hpp"

namespace trajadapt {

struct SolveOptions {
  int max_iters = 500;
  double grad_tol = 1e-6;   // infinity norm of the projected gradient
  double step_tol = 1e-10;  // line-search step floor
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double hessian_damping = 1e-8;

  void validate() const {
    if (max_iters <= 0 || grad_tol <= 0.0 || step_tol <= 0.0 || armijo_c <= 0.0 ||
        hessian_damping <= 0.0)
      throw ValidationError("SolveOptions: all options must be positive");
    if (backtrack_factor <= 0.0 || backtrack_factor >= 1.0)
      throw ValidationError("SolveOptions: backtrack_factor must be in (0,1)");
  }
};

struct FlatSolution {
  Eigen::VectorXd xi;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<double> cost_history;  // accepted iterates, entry 0 = start
};

struct Solution {
  DecisionVector xi_star;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
};

// Infinity norm of the projected gradient: the interior gradient, with
// components pointing out of the box zeroed at active bounds.
double projected_gradient_norm(const Eigen::VectorXd& xi, const Eigen::VectorXd& grad,
                               const BoxBounds& bounds);

// Projected Newton with Levenberg damping on the free set and a backtracking
// Armijo line search along the projected path. p is fixed during the solve.
FlatSolution minimize(const ParametricProblem& problem, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& xi0, const BoxBounds& bounds,
                      const SolveOptions& opts);

// Task-level entry point.
Solution solve(const TaskParameters& p, const RobotModel& model, const CostWeights& w,
               const DecisionVector& xi0, const BoxBounds& bounds, const SolveOptions& opts);

// Re-solve for perturbed parameters, warm-started from a prior solution.
Solution resolve_warm(const Solution& prior, const TaskParameters& p_new, const RobotModel& model,
                      const CostWeights& w, const BoxBounds& bounds, const SolveOptions& opts);

}  // namespace trajadapt
