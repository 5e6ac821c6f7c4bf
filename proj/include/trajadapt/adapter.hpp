#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "trajadapt/problem.hpp"
#include "trajadapt/solver.hpp"

namespace trajadapt {

// The argmin Jacobian d xi* / d p at a solved point: columnwise solution of
// (H + mu I) X = -M where H is the cost Hessian in xi and M the mixed block.
struct SensitivityMap {
  Eigen::MatrixXd matrix;  // dim xi x dim p
  Eigen::VectorXd xi_at;
  Eigen::VectorXd p_at;
  double damping_used = 0.0;
};

struct AdaptOptions {
  // Descending step scales tried by the line search; largest valid wins.
  std::vector<double> eta_grid = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  int max_outer_iters = 50;
  double dp_tol = 1e-4;  // infinity norm of the remaining parameter gap
  double hessian_damping = 1e-8;

  void validate() const;
};

enum class AdaptTermination { converged, eta_exhausted, max_iterations, singular };

const char* to_string(AdaptTermination t);

struct AdaptReport {
  AdaptTermination termination = AdaptTermination::converged;
  int iterations = 0;
  std::vector<double> eta_history;      // accepted eta per outer iteration
  std::vector<double> cost_history;     // cost at p_target, entry 0 = prior
  std::vector<double> dp_norm_history;  // ||delta p||_inf before each iteration
  double final_dp_norm = 0.0;
  int eq10_violations = 0;  // accepted steps that raised the cost at p_target; must stay 0
  std::string error;        // set when termination == singular
  double wall_time_s = 0.0;
  double t_derivatives_s = 0.0;
  double t_linear_solve_s = 0.0;
  double t_line_search_s = 0.0;
};

// Eq.-8 sensitivity: solve (H + mu I) X = -M, mu = damping * (1 + tr(H)/dim).
// On a failed solve the damping is escalated x10 up to 3 times, then a
// SingularityError carrying a condition estimate is thrown.
SensitivityMap argmin_jacobian(const DerivativeBundle& bundle, double damping);

// First-order transport of the optimum: xi + eta * S * delta_p (unprojected).
Eigen::VectorXd perturb_solution(const Eigen::VectorXd& xi, const SensitivityMap& s,
                                 const Eigen::VectorXd& delta_p, double eta);

// True iff f(xi_new, p_target) <= f(xi_old, p_target). Non-finite costs fail.
bool validity_check(const ParametricProblem& problem, const Eigen::VectorXd& xi_new,
                    const Eigen::VectorXd& xi_old, const Eigen::VectorXd& p_target);
bool validity_check(const DecisionVector& xi_new, const DecisionVector& xi_old,
                    const TaskParameters& p_perturbed, const RobotModel& model,
                    const CostWeights& w);

// Largest eta in the grid whose transported-and-projected candidate passes
// the validity check against xi at p_target; nullopt if the grid is exhausted.
std::optional<double> line_search(const ParametricProblem& problem, const Eigen::VectorXd& xi,
                                  const SensitivityMap& s, const Eigen::VectorXd& delta_p,
                                  const Eigen::VectorXd& p_target, const BoxBounds& bounds,
                                  const std::vector<double>& eta_grid);

// Achieved task parameters for a trajectory (Algorithm-style forward roll).
Eigen::VectorXd forward_roll(const DecisionVector& xi, const TaskParameters& p_kind,
                             const RobotModel& model);

// Full incremental adaptation loop.
std::pair<Eigen::VectorXd, AdaptReport> adapt(const ParametricProblem& problem,
                                              const Eigen::VectorXd& xi_prior,
                                              const Eigen::VectorXd& p_prior,
                                              const Eigen::VectorXd& p_target,
                                              const BoxBounds& bounds, const AdaptOptions& opts);

std::pair<DecisionVector, AdaptReport> adapt(const Solution& prior, const TaskParameters& p_prior,
                                             const TaskParameters& p_target,
                                             const RobotModel& model, const CostWeights& w,
                                             const BoxBounds& bounds, const AdaptOptions& opts);

}  // namespace trajadapt
