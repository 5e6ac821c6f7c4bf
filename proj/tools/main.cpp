#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "trajadapt/adapter.hpp"
#include "trajadapt/harness.hpp"

namespace {

using nlohmann::json;
using namespace trajadapt;

json trajectory_json(const DecisionVector& xi, const std::string& model_name) {
  json j;
  j["model"] = model_name;
  j["m"] = xi.m;
  j["n"] = xi.n;
  j["data"] = std::vector<double>(xi.data.data(), xi.data.data() + xi.data.size());
  return j;
}

DecisionVector trajectory_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open trajectory file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": JSON parse error: " + e.what());
  }
  if (!j.contains("m") || !j.contains("n") || !j.contains("data"))
    throw SchemaError(path + ": trajectory file needs fields m, n, data");
  const auto data = j.at("data").get<std::vector<double>>();
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(data.data(),
                                                           static_cast<Eigen::Index>(data.size()));
  return DecisionVector(std::move(flat), j.at("m").get<int>(), j.at("n").get<int>());
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Target-parameter file: overrides applied on top of the scenario's prior
// task. Boundary tasks accept q_start/q_end; tracking tasks accept
// tracked: [{t, x}] replacing the targets of matching indices.
TaskParameters load_target_params(const std::string& path, const Scenario& sc) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open target file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": JSON parse error: " + e.what());
  }
  TaskParameters target = sc.prior;
  auto read_vec = [&](const json& arr, Eigen::Index expected, const char* what) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected)
      throw SchemaError(path + ": '" + what + "' must be an array of length " +
                        std::to_string(expected));
    Eigen::VectorXd v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) v(i) = arr[static_cast<size_t>(i)].get<double>();
    return v;
  };
  if (target.kind == TaskKind::boundary_configs) {
    if (j.contains("q_start")) target.q_start = read_vec(j.at("q_start"), sc.model.dof(), "q_start");
    if (j.contains("q_end")) target.q_end = read_vec(j.at("q_end"), sc.model.dof(), "q_end");
  } else if (j.contains("tracked")) {
    for (const auto& tj : j.at("tracked")) {
      if (!tj.contains("t") || !tj.contains("x"))
        throw SchemaError(path + ": tracked overrides need fields t and x");
      const int t = tj.at("t").get<int>();
      bool found = false;
      for (auto& tp : target.tracked)
        if (tp.t == t) {
          tp.x = read_vec(tj.at("x"), 3, "x");
          found = true;
        }
      if (!found)
        throw ValidationError(path + ": tracked index " + std::to_string(t) +
                              " is not tracked by the scenario");
    }
  }
  return target;
}

json adapt_report_json(const AdaptReport& r) {
  json j;
  j["termination"] = to_string(r.termination);
  j["iterations"] = r.iterations;
  j["eta_history"] = r.eta_history;
  j["cost_history"] = r.cost_history;
  j["dp_norm_history"] = r.dp_norm_history;
  j["final_dp_norm"] = r.final_dp_norm;
  j["eq10_violations"] = r.eq10_violations;
  j["wall_time_s"] = r.wall_time_s;
  j["t_derivatives_s"] = r.t_derivatives_s;
  j["t_linear_solve_s"] = r.t_linear_solve_s;
  j["t_line_search_s"] = r.t_line_search_s;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

struct PriorSetup {
  BoxBounds bounds;
  Solution prior;
};

PriorSetup prepare_prior(const Scenario& sc, const std::string& prior_path, bool verbose) {
  PriorSetup s{BoxBounds::tile(sc.model.lower_limits, sc.model.upper_limits, sc.m), {}};
  if (!prior_path.empty()) {
    s.prior.xi_star = trajectory_from_file(prior_path);
    if (s.prior.xi_star.m != sc.m || s.prior.xi_star.n != sc.model.dof())
      throw ValidationError("prior trajectory dimensions do not match the scenario");
    s.prior.cost = total_cost(s.prior.xi_star, sc.prior, sc.model, sc.weights);
    s.prior.converged = true;
  } else {
    const DecisionVector seed = interpolate_seed(sc.q_start, sc.q_end, sc.m);
    s.prior = solve(sc.prior, sc.model, sc.weights, seed, s.bounds, sc.solver_options);
    if (verbose)
      std::cerr << "prior solve: cost " << s.prior.cost << ", " << s.prior.iterations
                << " iterations, converged=" << s.prior.converged << "\n";
  }
  return s;
}

int run_check() {
  int failed = 0;
  auto report = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << name << "\n";
    if (!ok) ++failed;
  };

  // Quadratic hook: sensitivity is the identity and one adapt step is exact.
  {
    const int d = 6;
    QuadraticProblem prob(Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(d), p1 = Eigen::VectorXd::Constant(d, 0.4);
    const DerivativeBundle b = prob.derivatives(p0, p0, {true, true, true});
    const SensitivityMap s = argmin_jacobian(b, 0.0);
    bool ok = (s.matrix - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-12;
    BoxBounds bounds(Eigen::VectorXd::Constant(d, -10.0), Eigen::VectorXd::Constant(d, 10.0));
    AdaptOptions opts;
    opts.hessian_damping = 0.0;
    const auto [xi, rep] = adapt(prob, p0, p0, p1, bounds, opts);
    ok = ok && (xi - p1).lpNorm<Eigen::Infinity>() < 1e-10;
    report("quadratic sensitivity + one-shot adapt", ok);
  }

  // Derivatives against central finite differences on a small planar task.
  {
    RobotModel model;
    model.name = "planar3-inline";
    model.convention = DHConvention::classic;
    model.joints = {DHRow{1.0, 0, 0, 0}, DHRow{1.0, 0, 0, 0}, DHRow{1.0, 0, 0, 0}};
    model.lower_limits = Eigen::VectorXd::Constant(3, -M_PI);
    model.upper_limits = Eigen::VectorXd::Constant(3, M_PI);

    const int m = 6;
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    DecisionVector xi(m, 3);
    for (int i = 0; i < xi.dim(); ++i) xi.data(i) = dist(eng);
    Eigen::VectorXd q0(3), qm(3);
    for (int i = 0; i < 3; ++i) q0(i) = dist(eng);
    for (int i = 0; i < 3; ++i) qm(i) = dist(eng);
    TaskParameters p = TaskParameters::boundary(q0, qm, Eigen::Vector3d(0, 0, 0));
    CostWeights w;

    const DerivativeBundle b = derivatives(xi, p, model, w, {true, true, true});
    double worst = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < xi.dim(); ++i) {
      DecisionVector hi = xi, lo = xi;
      hi.data(i) += h;
      lo.data(i) -= h;
      const double fd =
          (total_cost(hi, p, model, w) - total_cost(lo, p, model, w)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - b.gradient(i)) / std::max(1.0, std::abs(fd)));
    }
    report("gradient matches finite differences (planar task)", worst < 1e-5);
    const double asym = (b.hessian - b.hessian.transpose()).norm() / b.hessian.norm();
    report("hessian symmetry", asym < 1e-9);
  }

  // Euler round-trip on random rotations.
  {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    bool ok = true;
    for (int k = 0; k < 50; ++k) {
      Eigen::Vector3d rpy(dist(eng) * 3.0, dist(eng) * 1.4, dist(eng) * 3.0);
      const Eigen::Matrix3d r = matrix_from_euler(rpy);
      const auto [back, degenerate] = euler_from_matrix(r);
      if (!degenerate) ok = ok && (matrix_from_euler(back) - r).norm() < 1e-9;
    }
    report("euler extraction round-trip", ok);
  }

  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-constrained trajectory optimization with sensitivity-based adaptation"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", target_path, prior_path;
  bool verbose = false, zero_times = false;
  uint64_t seed = 0;
  int trials = 0;
  bool seed_set = false, trials_set = false;

  auto add_common = [&](CLI::App* cmd, bool needs_target) {
    cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--out", out_dir, "Output directory");
    if (needs_target)
      cmd->add_option("--target", target_path, "Target-parameter JSON file")->required();
    cmd->add_option("--prior", prior_path, "Prior trajectory JSON (skips the prior solve)");
    cmd->add_flag("--verbose", verbose, "Chatty progress on stderr");
  };

  CLI::App* cmd_solve = app.add_subcommand("solve", "Solve the scenario's prior trajectory");
  add_common(cmd_solve, false);
  CLI::App* cmd_adapt = app.add_subcommand("adapt", "Adapt the prior to target parameters");
  add_common(cmd_adapt, true);
  CLI::App* cmd_resolve =
      app.add_subcommand("resolve", "Warm-started re-solve for target parameters");
  add_common(cmd_resolve, true);
  CLI::App* cmd_bench = app.add_subcommand("bench", "Run the scenario's benchmark sweep");
  add_common(cmd_bench, false);
  cmd_bench->add_option("--seed", seed, "Override the scenario RNG seed")
      ->each([&](const std::string&) { seed_set = true; });
  cmd_bench->add_option("--trials", trials, "Override the scenario trial count")
      ->each([&](const std::string&) { trials_set = true; });
  cmd_bench->add_flag("--zero-times", zero_times,
                      "Write zeros in the timing columns so outputs are byte-reproducible");
  CLI::App* cmd_check = app.add_subcommand("check", "Run built-in derivative self-tests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (cmd_check->parsed()) return run_check();

    const Scenario sc = load_scenario(scenario_path);
    const std::filesystem::path out(out_dir);

    if (cmd_solve->parsed()) {
      const PriorSetup s = prepare_prior(sc, prior_path, verbose);
      json j = trajectory_json(s.prior.xi_star, sc.model.name);
      j["cost"] = s.prior.cost;
      j["iterations"] = s.prior.iterations;
      j["converged"] = s.prior.converged;
      j["wall_time_s"] = s.prior.wall_time_s;
      write_json(out / "prior.json", j);
      std::cout << "wrote " << (out / "prior.json").string() << "\n";
    } else if (cmd_adapt->parsed()) {
      const PriorSetup s = prepare_prior(sc, prior_path, verbose);
      const TaskParameters target = load_target_params(target_path, sc);
      const auto [xi, report] =
          adapt(s.prior, sc.prior, target, sc.model, sc.weights, s.bounds, sc.adapt_options);
      write_json(out / "adapted_trajectory.json", trajectory_json(xi, sc.model.name));
      write_json(out / "adapt_report.json", adapt_report_json(report));
      std::cout << "adapt: " << to_string(report.termination) << " after " << report.iterations
                << " iterations, |dp| " << report.final_dp_norm << ", " << report.wall_time_s
                << " s\n";
    } else if (cmd_resolve->parsed()) {
      const PriorSetup s = prepare_prior(sc, prior_path, verbose);
      const TaskParameters target = load_target_params(target_path, sc);
      const Solution sol =
          resolve_warm(s.prior, target, sc.model, sc.weights, s.bounds, sc.solver_options);
      json j = trajectory_json(sol.xi_star, sc.model.name);
      j["cost"] = sol.cost;
      j["iterations"] = sol.iterations;
      j["converged"] = sol.converged;
      j["wall_time_s"] = sol.wall_time_s;
      write_json(out / "resolved_trajectory.json", j);
      std::cout << "resolve: cost " << sol.cost << " in " << sol.iterations << " iterations, "
                << sol.wall_time_s << " s\n";
    } else if (cmd_bench->parsed()) {
      BenchmarkOptions opts;
      if (seed_set) opts.seed_override = seed;
      if (trials_set) opts.trials_override = trials;
      opts.zero_times = zero_times;
      opts.verbose = verbose;
      const BenchmarkResult result = run_benchmark(sc, opts);
      write_benchmark_outputs(result, out_dir, zero_times);
      std::cout << "wrote " << (out / "metrics.csv").string() << " and "
                << (out / "summary.json").string() << "\n";
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
