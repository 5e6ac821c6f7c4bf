#include "trajadapt/adapter.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>

namespace trajadapt {

void AdaptOptions::validate() const {
  if (eta_grid.empty()) throw ValidationError("AdaptOptions: eta_grid must be nonempty");
  double prev = 1.0 + 1e-12;
  for (double eta : eta_grid) {
    if (eta <= 0.0 || eta > 1.0) throw ValidationError("AdaptOptions: eta values must be in (0,1]");
    if (eta >= prev) throw ValidationError("AdaptOptions: eta_grid must be strictly descending");
    prev = eta;
  }
  if (max_outer_iters <= 0 || dp_tol <= 0.0)
    throw ValidationError("AdaptOptions: max_outer_iters and dp_tol must be positive");
  if (hessian_damping < 0.0)
    throw ValidationError("AdaptOptions: hessian_damping must be nonnegative");
}

const char* to_string(AdaptTermination t) {
  switch (t) {
    case AdaptTermination::converged: return "converged";
    case AdaptTermination::eta_exhausted: return "eta_exhausted";
    case AdaptTermination::max_iterations: return "max_iterations";
    case AdaptTermination::singular: return "singular";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

SensitivityMap argmin_jacobian(const DerivativeBundle& bundle, double damping) {
  const Eigen::Index dim = bundle.hessian.rows();
  if (dim == 0 || bundle.mixed.rows() != dim)
    throw DimensionError("argmin_jacobian: bundle must carry hessian and mixed blocks");

  double mu = damping * (1.0 + bundle.hessian.trace() / static_cast<double>(dim));
  SensitivityMap map;
  double rcond = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(bundle.hessian +
                                      mu * Eigen::MatrixXd::Identity(dim, dim));
    if (ldlt.info() == Eigen::Success) {
      Eigen::MatrixXd x = ldlt.solve(-bundle.mixed);
      const Eigen::VectorXd d = ldlt.vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      const double dmin = d.cwiseAbs().minCoeff();
      rcond = dmax > 0.0 ? dmin / dmax : 0.0;
      const double residual =
          ((bundle.hessian + mu * Eigen::MatrixXd::Identity(dim, dim)) * x + bundle.mixed)
              .norm();
      if (x.allFinite() && residual <= 1e-8 * std::max(1.0, bundle.mixed.norm())) {
        map.matrix = std::move(x);
        map.damping_used = mu;
        return map;
      }
    }
    mu = mu > 0.0 ? mu * 10.0 : damping;  // escalate; a zero damping retries as-given once
  }
  throw SingularityError(
      "argmin_jacobian: Hessian solve failed after damping escalation (rcond estimate " +
          std::to_string(rcond) + ")",
      rcond);
}

Eigen::VectorXd perturb_solution(const Eigen::VectorXd& xi, const SensitivityMap& s,
                                 const Eigen::VectorXd& delta_p, double eta) {
  if (s.matrix.rows() != xi.size() || s.matrix.cols() != delta_p.size())
    throw DimensionError("perturb_solution: sensitivity dimensions do not match xi/delta_p");
  return xi + eta * (s.matrix * delta_p);
}

bool validity_check(const ParametricProblem& problem, const Eigen::VectorXd& xi_new,
                    const Eigen::VectorXd& xi_old, const Eigen::VectorXd& p_target) {
  const double f_new = problem.cost(xi_new, p_target);
  if (!std::isfinite(f_new)) return false;
  const double f_old = problem.cost(xi_old, p_target);
  if (!std::isfinite(f_old)) return false;
  return f_new <= f_old;
}

bool validity_check(const DecisionVector& xi_new, const DecisionVector& xi_old,
                    const TaskParameters& p_perturbed, const RobotModel& model,
                    const CostWeights& w) {
  TaskProblem problem(model, w, p_perturbed, xi_new.m);
  return validity_check(problem, xi_new.data, xi_old.data, p_perturbed.flat());
}

std::optional<double> line_search(const ParametricProblem& problem, const Eigen::VectorXd& xi,
                                  const SensitivityMap& s, const Eigen::VectorXd& delta_p,
                                  const Eigen::VectorXd& p_target, const BoxBounds& bounds,
                                  const std::vector<double>& eta_grid) {
  for (double eta : eta_grid) {
    const Eigen::VectorXd candidate = project(perturb_solution(xi, s, delta_p, eta), bounds);
    if (validity_check(problem, candidate, xi, p_target)) return eta;
  }
  return std::nullopt;
}

Eigen::VectorXd forward_roll(const DecisionVector& xi, const TaskParameters& p_kind,
                             const RobotModel& model) {
  TaskProblem problem(model, CostWeights{}, p_kind, xi.m);
  return problem.forward_roll(xi.data);
}

std::pair<Eigen::VectorXd, AdaptReport> adapt(const ParametricProblem& problem,
                                              const Eigen::VectorXd& xi_prior,
                                              const Eigen::VectorXd& p_prior,
                                              const Eigen::VectorXd& p_target,
                                              const BoxBounds& bounds, const AdaptOptions& opts) {
  opts.validate();
  if (p_prior.size() != problem.p_dim() || p_target.size() != problem.p_dim())
    throw DimensionError("adapt: parameter dimension mismatch");
  if (xi_prior.size() != problem.xi_dim()) throw DimensionError("adapt: xi dimension mismatch");

  const auto start = Clock::now();
  const DerivativeRequest hess_and_mixed{false, true, true};

  AdaptReport report;
  Eigen::VectorXd xi = xi_prior;
  Eigen::VectorXd p_current = p_prior;
  Eigen::VectorXd dp = p_target - p_current;
  double cost_at_target = problem.cost(xi, p_target);
  report.cost_history.push_back(cost_at_target);

  while (true) {
    const double dp_norm = dp.lpNorm<Eigen::Infinity>();
    report.dp_norm_history.push_back(dp_norm);
    if (dp_norm <= opts.dp_tol) {
      report.termination = AdaptTermination::converged;
      break;
    }
    if (report.iterations >= opts.max_outer_iters) {
      report.termination = AdaptTermination::max_iterations;
      break;
    }

    const auto t0 = Clock::now();
    SensitivityMap sens;
    try {
      const DerivativeBundle bundle = problem.derivatives(xi, p_current, hess_and_mixed);
      report.t_derivatives_s += seconds_since(t0);
      const auto t1 = Clock::now();
      sens = argmin_jacobian(bundle, opts.hessian_damping);
      report.t_linear_solve_s += seconds_since(t1);
    } catch (const SingularityError& e) {
      report.termination = AdaptTermination::singular;
      report.error = e.what();
      break;
    }

    const auto t2 = Clock::now();
    const std::optional<double> eta =
        line_search(problem, xi, sens, dp, p_target, bounds, opts.eta_grid);
    report.t_line_search_s += seconds_since(t2);
    if (!eta) {
      report.termination = AdaptTermination::eta_exhausted;
      break;
    }

    xi = project(perturb_solution(xi, sens, dp, *eta), bounds);
    const double new_cost = problem.cost(xi, p_target);
    if (new_cost > cost_at_target) ++report.eq10_violations;  // must never happen
    cost_at_target = new_cost;

    p_current = problem.forward_roll(xi);
    dp = p_target - p_current;
    report.eta_history.push_back(*eta);
    report.cost_history.push_back(cost_at_target);
    ++report.iterations;
  }

  report.final_dp_norm = dp.lpNorm<Eigen::Infinity>();
  report.wall_time_s = seconds_since(start);
  return {std::move(xi), report};
}

std::pair<DecisionVector, AdaptReport> adapt(const Solution& prior, const TaskParameters& p_prior,
                                             const TaskParameters& p_target,
                                             const RobotModel& model, const CostWeights& w,
                                             const BoxBounds& bounds, const AdaptOptions& opts) {
  if (p_prior.kind != p_target.kind)
    throw ValidationError("adapt: prior and target parameters must have the same kind");
  if (p_prior.param_dim() != p_target.param_dim())
    throw DimensionError("adapt: prior and target parameter dimensions differ");
  TaskProblem problem(model, w, p_target, prior.xi_star.m);
  auto [xi, report] =
      adapt(problem, prior.xi_star.data, p_prior.flat(), p_target.flat(), bounds, opts);
  return {DecisionVector(std::move(xi), prior.xi_star.m, prior.xi_star.n), report};
}

}  // namespace trajadapt
