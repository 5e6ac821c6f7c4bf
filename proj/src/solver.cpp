#include "trajadapt/solver.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>

namespace trajadapt {

double projected_gradient_norm(const Eigen::VectorXd& xi, const Eigen::VectorXd& grad,
                               const BoxBounds& bounds) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    double g = grad(i);
    if (xi(i) <= bounds.lb(i) && g > 0.0) g = 0.0;
    if (xi(i) >= bounds.ub(i) && g < 0.0) g = 0.0;
    norm = std::max(norm, std::abs(g));
  }
  return norm;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

FlatSolution minimize(const ParametricProblem& problem, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& xi0, const BoxBounds& bounds,
                      const SolveOptions& opts) {
  opts.validate();
  if (xi0.size() != problem.xi_dim()) throw DimensionError("minimize: xi0 dimension mismatch");
  if (xi0.size() != bounds.lb.size()) throw DimensionError("minimize: bounds dimension mismatch");

  const auto start = Clock::now();
  const int dim = static_cast<int>(xi0.size());
  const DerivativeRequest grad_and_hess{true, true, false};

  Eigen::VectorXd xi = project(xi0, bounds);
  double f = problem.cost(xi, p);
  if (!std::isfinite(f)) throw NumericError("minimize: non-finite cost at initial point");

  FlatSolution sol;
  sol.cost_history.push_back(f);
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const DerivativeBundle bundle = problem.derivatives(xi, p, grad_and_hess);
    const Eigen::VectorXd& g = bundle.gradient;

    if (projected_gradient_norm(xi, g, bounds) <= opts.grad_tol) {
      sol.converged = true;
      break;
    }

    // Free set: strictly inside the box, or at a bound with the descent
    // direction pointing inward.
    std::vector<int> free;
    free.reserve(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      const bool at_lb = xi(i) <= bounds.lb(i);
      const bool at_ub = xi(i) >= bounds.ub(i);
      if ((at_lb && g(i) >= 0.0) || (at_ub && g(i) <= 0.0)) continue;
      free.push_back(i);
    }
    if (free.empty()) {  // fully pinned and stationary
      sol.converged = true;
      break;
    }
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd hff(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int r = 0; r < nf; ++r) {
      gf(r) = g(free[static_cast<size_t>(r)]);
      for (int c = 0; c < nf; ++c)
        hff(r, c) = bundle.hessian(free[static_cast<size_t>(r)], free[static_cast<size_t>(c)]);
    }

    // Levenberg damping; escalate until the step is a usable descent
    // direction (the FK terms can make the Hessian indefinite).
    double mu = opts.hessian_damping * (1.0 + bundle.hessian.trace() / dim);
    Eigen::VectorXd df;
    bool ok = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hff + mu * Eigen::MatrixXd::Identity(nf, nf));
      if (ldlt.info() == Eigen::Success) {
        df = ldlt.solve(-gf);
        if (df.allFinite() && df.dot(gf) < 0.0) {
          ok = true;
          break;
        }
      }
      mu = std::max(mu * 10.0, 1e-12);
    }
    if (!ok) df = -gf;  // steepest descent fallback

    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    for (int r = 0; r < nf; ++r) d(free[static_cast<size_t>(r)]) = df(r);

    // Backtracking Armijo along the projected path. The 'min' keeps accepted
    // steps non-increasing in cost even when projection bends the path.
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd cand;
    double fc = f;
    while (true) {
      cand = project(xi + alpha * d, bounds);
      const Eigen::VectorXd displacement = cand - xi;
      if (displacement.lpNorm<Eigen::Infinity>() < opts.step_tol) break;
      fc = problem.cost(cand, p);
      if (std::isfinite(fc) && fc <= f + opts.armijo_c * std::min(0.0, g.dot(displacement))) {
        accepted = true;
        break;
      }
      alpha *= opts.backtrack_factor;
    }
    if (!accepted) break;  // line-search failure: return best iterate, converged stays false
    xi = cand;
    f = fc;
    sol.cost_history.push_back(f);
  }

  sol.xi = xi;
  sol.cost = f;
  sol.iterations = iter;
  sol.wall_time_s = seconds_since(start);
  return sol;
}

Solution solve(const TaskParameters& p, const RobotModel& model, const CostWeights& w,
               const DecisionVector& xi0, const BoxBounds& bounds, const SolveOptions& opts) {
  if (xi0.n != model.dof()) throw DimensionError("solve: xi0 joint count does not match model");
  TaskProblem problem(model, w, p, xi0.m);
  const FlatSolution flat = minimize(problem, p.flat(), xi0.data, bounds, opts);
  Solution sol;
  sol.xi_star = DecisionVector(flat.xi, xi0.m, xi0.n);
  sol.cost = flat.cost;
  sol.iterations = flat.iterations;
  sol.converged = flat.converged;
  sol.wall_time_s = flat.wall_time_s;
  return sol;
}

Solution resolve_warm(const Solution& prior, const TaskParameters& p_new, const RobotModel& model,
                      const CostWeights& w, const BoxBounds& bounds, const SolveOptions& opts) {
  return solve(p_new, model, w, prior.xi_star, bounds, opts);
}

}  // namespace trajadapt
