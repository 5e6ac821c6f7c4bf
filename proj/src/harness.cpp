#include "trajadapt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "trajadapt/trajectory.hpp"

namespace trajadapt {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Eigen::VectorXd json_vector(const json& j, const std::string& key, const std::string& origin) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw SchemaError(origin + ": missing array field '" + key + "'");
  const auto& arr = j.at(key);
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw SchemaError(origin + ": '" + key + "' entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

double json_number(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

const char* to_string(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::final_config: return "final_config";
    case BenchmarkKind::via_point: return "via_point";
    case BenchmarkKind::final_position: return "final_position";
  }
  return "unknown";
}

BenchmarkKind benchmark_from_string(const std::string& s) {
  if (s == "final_config") return BenchmarkKind::final_config;
  if (s == "via_point") return BenchmarkKind::via_point;
  if (s == "final_position") return BenchmarkKind::final_position;
  throw SchemaError("unknown benchmark '" + s +
                    "' (expected final_config, via_point or final_position)");
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": JSON parse error: " + e.what());
  }

  Scenario sc;
  if (!j.contains("benchmark") || !j.at("benchmark").is_string())
    throw SchemaError(path + ": missing string field 'benchmark'");
  sc.benchmark = benchmark_from_string(j.at("benchmark").get<std::string>());

  if (!j.contains("robot_model") || !j.at("robot_model").is_string())
    throw SchemaError(path + ": missing string field 'robot_model'");
  std::filesystem::path model_path(j.at("robot_model").get<std::string>());
  if (model_path.is_relative())
    model_path = std::filesystem::path(path).parent_path() / model_path;
  sc.robot_model_path = model_path.string();
  sc.model = load_robot_model(sc.robot_model_path);
  const int n = sc.model.dof();

  if (!j.contains("m") || !j.at("m").is_number_integer())
    throw SchemaError(path + ": missing integer field 'm'");
  sc.m = j.at("m").get<int>();
  if (sc.m < 4) throw ValidationError(path + ": m must be >= 4");

  if (j.contains("weights")) {
    const auto& wj = j.at("weights");
    if (wj.contains("smooth")) {
      const Eigen::VectorXd s = json_vector(wj, "smooth", path);
      if (s.size() != 3) throw SchemaError(path + ": weights.smooth must have 3 entries");
      sc.weights.smooth = s;
    }
    sc.weights.boundary = json_number(wj, "boundary", sc.weights.boundary);
    sc.weights.orient = json_number(wj, "orient", sc.weights.orient);
    sc.weights.track = json_number(wj, "track", sc.weights.track);
  }

  if (!j.contains("prior") || !j.at("prior").is_object())
    throw SchemaError(path + ": missing object field 'prior'");
  const auto& pj = j.at("prior");
  sc.q_start = json_vector(pj, "q_start", path);
  sc.q_end = json_vector(pj, "q_end", path);
  if (sc.q_start.size() != n || sc.q_end.size() != n)
    throw ValidationError(path + ": q_start/q_end must have one entry per joint");
  if (!sc.model.within_limits(sc.q_start) || !sc.model.within_limits(sc.q_end))
    throw ValidationError(path + ": q_start/q_end violate the model's joint limits");

  Eigen::Vector3d o_d;
  if (pj.contains("o_d")) {
    const Eigen::VectorXd v = json_vector(pj, "o_d", path);
    if (v.size() != 3) throw SchemaError(path + ": prior.o_d must have 3 entries");
    o_d = v;
  } else {
    o_d = forward_kinematics(sc.model, sc.q_start).rpy;  // hold the start orientation
  }
  Eigen::Vector3d axes(1.0, 1.0, 0.0);
  if (pj.contains("orient_axes")) {
    const Eigen::VectorXd v = json_vector(pj, "orient_axes", path);
    if (v.size() != 3) throw SchemaError(path + ": prior.orient_axes must have 3 entries");
    axes = v;
  }

  if (sc.benchmark == BenchmarkKind::final_config) {
    sc.prior = TaskParameters::boundary(sc.q_start, sc.q_end, o_d, axes);
  } else {
    if (!pj.contains("tracked") || !pj.at("tracked").is_array() || pj.at("tracked").empty())
      throw SchemaError(path + ": tracking benchmarks need a non-empty 'prior.tracked' array");
    const DecisionVector seed = interpolate_seed(sc.q_start, sc.q_end, sc.m);
    std::vector<TrackedPoint> tracked;
    for (const auto& tj : pj.at("tracked")) {
      if (!tj.is_object() || !tj.contains("t") || !tj.at("t").is_number_integer())
        throw SchemaError(path + ": each tracked entry needs an integer field 't'");
      TrackedPoint tp;
      tp.t = tj.at("t").get<int>();
      if (tp.t < 0 || tp.t >= sc.m)
        throw ValidationError(path + ": tracked index " + std::to_string(tp.t) + " out of range");
      if (tj.contains("x")) {
        const Eigen::VectorXd v = json_vector(tj, "x", path);
        if (v.size() != 3) throw SchemaError(path + ": tracked 'x' must have 3 entries");
        tp.x = v;
      } else {
        tp.x = forward_kinematics(sc.model, seed.waypoint(tp.t)).position;
      }
      tracked.push_back(tp);
    }
    sc.prior = TaskParameters::tracking(std::move(tracked), o_d, axes);
    sc.prior.validate(sc.m, n);
  }

  if (!j.contains("perturbation") || !j.at("perturbation").is_object())
    throw SchemaError(path + ": missing object field 'perturbation'");
  const auto& qj = j.at("perturbation");
  const Eigen::VectorXd range = json_vector(qj, "range_frac", path);
  if (range.size() != 2 || range(0) < 0.0 || range(1) < range(0))
    throw ValidationError(path + ": perturbation.range_frac must be [lo, hi] with 0 <= lo <= hi");
  sc.perturbation.range_lo_frac = range(0);
  sc.perturbation.range_hi_frac = range(1);
  if (!qj.contains("count") || !qj.at("count").is_number_integer())
    throw SchemaError(path + ": perturbation.count must be an integer");
  sc.perturbation.count = qj.at("count").get<int>();
  if (sc.perturbation.count < 1) throw ValidationError(path + ": perturbation.count must be >= 1");
  if (!qj.contains("seed") || !qj.at("seed").is_number())
    throw SchemaError(path + ": perturbation.seed must be a number");
  sc.perturbation.seed = qj.at("seed").get<uint64_t>();

  if (j.contains("solver_options")) {
    const auto& oj = j.at("solver_options");
    sc.solver_options.max_iters = static_cast<int>(json_number(oj, "max_iters", 500));
    sc.solver_options.grad_tol = json_number(oj, "grad_tol", 1e-6);
    sc.solver_options.step_tol = json_number(oj, "step_tol", 1e-10);
    sc.solver_options.armijo_c = json_number(oj, "armijo_c", 1e-4);
    sc.solver_options.backtrack_factor = json_number(oj, "backtrack_factor", 0.5);
    sc.solver_options.hessian_damping = json_number(oj, "hessian_damping", 1e-8);
    sc.solver_options.validate();
  }
  if (j.contains("adapt_options")) {
    const auto& oj = j.at("adapt_options");
    if (oj.contains("eta_grid")) {
      const Eigen::VectorXd grid = json_vector(oj, "eta_grid", path);
      sc.adapt_options.eta_grid.assign(grid.data(), grid.data() + grid.size());
    }
    sc.adapt_options.max_outer_iters =
        static_cast<int>(json_number(oj, "max_outer_iters", 50));
    sc.adapt_options.dp_tol = json_number(oj, "dp_tol", 1e-4);
    sc.adapt_options.hessian_damping = json_number(oj, "hessian_damping", 1e-8);
    sc.adapt_options.validate();
  }
  return sc;
}

std::vector<Perturbation> generate_perturbations(const Scenario& scenario, Rng& rng) {
  const RobotModel& model = scenario.model;
  const double reach = model.reach();
  const double lo = scenario.perturbation.range_lo_frac * reach;
  const double hi = scenario.perturbation.range_hi_frac * reach;
  const int n = model.dof();

  std::vector<Perturbation> out;
  out.reserve(static_cast<size_t>(scenario.perturbation.count));

  for (int trial = 0; trial < scenario.perturbation.count; ++trial) {
    bool done = false;
    for (int attempt = 0; attempt <= 100 && !done; ++attempt) {
      const double s = rng.uniform(lo, hi);
      if (scenario.benchmark == BenchmarkKind::final_config) {
        // Joint-space direction, scaled so the end-effector moves by s.
        const Eigen::VectorXd u = rng.sphere_direction(n);
        const Eigen::Vector3d base = forward_kinematics(model, scenario.q_end).position;
        auto ee_dist = [&](double alpha) {
          return (forward_kinematics(model, scenario.q_end + alpha * u).position - base).norm();
        };
        double alpha_hi = 0.05;
        while (ee_dist(alpha_hi) < s && alpha_hi < M_PI) alpha_hi *= 2.0;
        if (ee_dist(alpha_hi) < s) continue;  // direction barely moves the EE: redraw
        double a = 0.0, b = alpha_hi;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (a + b);
          (ee_dist(mid) < s ? a : b) = mid;
        }
        const double alpha = 0.5 * (a + b);
        const Eigen::VectorXd q_pert = scenario.q_end + alpha * u;
        if (!model.within_limits(q_pert)) continue;
        Perturbation p;
        p.target = scenario.prior;
        p.target.q_end = q_pert;
        p.magnitude_m = ee_dist(alpha);
        out.push_back(std::move(p));
        done = true;
      } else {
        const size_t idx = scenario.benchmark == BenchmarkKind::via_point
                               ? (scenario.prior.tracked.size() - 1) / 2
                               : scenario.prior.tracked.size() - 1;
        const Eigen::VectorXd u = rng.sphere_direction(3);
        Perturbation p;
        p.target = scenario.prior;
        p.target.tracked[idx].x += s * u;
        p.magnitude_m = s;
        out.push_back(std::move(p));
        done = true;
      }
    }
    if (!done)
      throw ValidationError("generate_perturbations: could not draw a feasible perturbation "
                            "within 100 redraws (range too large for the joint limits?)");
  }
  return out;
}

double orientation_metric(const std::vector<Pose>& poses_adapt,
                          const std::vector<Pose>& poses_resolve) {
  if (poses_adapt.size() != poses_resolve.size())
    throw DimensionError("orientation_metric: pose lists differ in length");
  double worst = 0.0;
  for (size_t t = 0; t < poses_adapt.size(); ++t) {
    for (int axis = 0; axis < 2; ++axis) {  // roll, pitch; yaw is free
      const double d =
          std::abs(angle_diff(poses_adapt[t].rpy(axis), poses_resolve[t].rpy(axis)));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

double task_residual(const DecisionVector& xi, const TaskParameters& p, const RobotModel& model) {
  if (p.kind == TaskKind::boundary_configs) {
    // Joint-space error at the final waypoint, expressed in position units
    // through the forward kinematics of both configurations.
    const Eigen::Vector3d achieved = forward_kinematics(model, xi.waypoint(xi.m - 1)).position;
    const Eigen::Vector3d commanded = forward_kinematics(model, p.q_end).position;
    return (achieved - commanded).norm();
  }
  double worst = 0.0;
  for (const auto& tp : p.tracked) {
    const Eigen::Vector3d achieved = forward_kinematics(model, xi.waypoint(tp.t)).position;
    worst = std::max(worst, (achieved - tp.x).norm());
  }
  return worst;
}

ResidualRatio task_residual_ratio(const DecisionVector& xi_adapt,
                                  const DecisionVector& xi_resolve,
                                  const TaskParameters& p_target, const RobotModel& model) {
  ResidualRatio r;
  r.adapt_residual = task_residual(xi_adapt, p_target, model);
  r.resolve_residual = task_residual(xi_resolve, p_target, model);
  if (r.resolve_residual < 1e-12) {
    r.resolve_exact = true;
    r.ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.ratio = r.adapt_residual / r.resolve_residual;
  }
  return r;
}

double smoothness_metric(const DecisionVector& xi_adapt, const DecisionVector& xi_resolve) {
  if (xi_adapt.m != xi_resolve.m || xi_adapt.n != xi_resolve.n)
    throw DimensionError("smoothness_metric: trajectory dimensions differ");
  return std::abs(smoothness_cost_order1(xi_adapt) - smoothness_cost_order1(xi_resolve));
}

std::string metrics_csv_header() {
  return "trial_id,magnitude_m,orient_linf_rad,residual_ratio,smooth_diff,t_adapt_s,"
         "t_resolve_s,adapt_termination";
}

std::string to_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.trial_id << ',' << fmt_double(r.magnitude_m) << ',' << fmt_double(r.orient_linf_rad)
     << ',';
  if (r.residual.resolve_exact)
    os << "resolve-exact:" << fmt_double(r.residual.adapt_residual);
  else
    os << fmt_double(r.residual.ratio);
  os << ',' << fmt_double(r.smooth_diff) << ',' << fmt_double(r.t_adapt_s) << ','
     << fmt_double(r.t_resolve_s) << ',' << r.adapt_termination;
  return os.str();
}

MetricsRecord metrics_from_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != 8) throw SchemaError("metrics row must have 8 cells: " + line);
  MetricsRecord r;
  r.trial_id = std::stoi(cells[0]);
  r.magnitude_m = std::stod(cells[1]);
  r.orient_linf_rad = std::stod(cells[2]);
  if (cells[3].rfind("resolve-exact:", 0) == 0) {
    r.residual.resolve_exact = true;
    r.residual.adapt_residual = std::stod(cells[3].substr(14));
    r.residual.ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.residual.ratio = std::stod(cells[3]);
  }
  r.smooth_diff = std::stod(cells[4]);
  r.t_adapt_s = std::stod(cells[5]);
  r.t_resolve_s = std::stod(cells[6]);
  r.adapt_termination = cells[7];
  return r;
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const size_t i = static_cast<size_t>(std::floor(h));
    const double frac = h - static_cast<double>(i);
    if (i + 1 >= values.size()) return values.back();
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

namespace {

json quartiles_json(const Quartiles& q) {
  return json{{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}};
}

std::string bin_of(double magnitude_m, double reach) {
  const double frac = magnitude_m / reach;
  if (frac <= 0.05) return "small";
  if (frac <= 0.15) return "medium";
  if (frac <= 0.30) return "large";
  return "xlarge";
}

json summarize(const std::vector<MetricsRecord>& records, const Scenario& scenario) {
  json out;
  out["benchmark"] = to_string(scenario.benchmark);
  out["robot"] = scenario.model.name;
  out["reach_m"] = scenario.model.reach();
  out["trials"] = records.size();

  std::vector<std::string> bin_names = {"small", "medium", "large", "xlarge"};
  json bins = json::object();
  int failures = 0;
  std::vector<double> all_t_adapt, all_t_resolve;
  int orient_ok = 0, ratio_ok = 0, ratio_total = 0;

  for (const auto& name : bin_names) {
    std::vector<double> mags, orients, ratios, smooths, t_as, t_rs;
    for (const auto& r : records) {
      if (r.adapt_termination.rfind("error", 0) == 0) continue;
      if (bin_of(r.magnitude_m, scenario.model.reach()) != name) continue;
      mags.push_back(r.magnitude_m);
      orients.push_back(r.orient_linf_rad);
      if (!r.residual.resolve_exact) ratios.push_back(r.residual.ratio);
      smooths.push_back(r.smooth_diff);
      t_as.push_back(r.t_adapt_s);
      t_rs.push_back(r.t_resolve_s);
    }
    if (mags.empty()) continue;
    json b;
    b["count"] = mags.size();
    b["magnitude_m"] = quartiles_json(quartiles(mags));
    b["orient_linf_rad"] = quartiles_json(quartiles(orients));
    if (!ratios.empty()) b["residual_ratio"] = quartiles_json(quartiles(ratios));
    b["smooth_diff"] = quartiles_json(quartiles(smooths));
    b["t_adapt_s"] = quartiles_json(quartiles(t_as));
    b["t_resolve_s"] = quartiles_json(quartiles(t_rs));
    bins[name] = b;
  }

  for (const auto& r : records) {
    if (r.adapt_termination.rfind("error", 0) == 0) {
      ++failures;
      continue;
    }
    all_t_adapt.push_back(r.t_adapt_s);
    all_t_resolve.push_back(r.t_resolve_s);
    if (r.orient_linf_rad <= 0.1) ++orient_ok;
    if (!r.residual.resolve_exact) {
      ++ratio_total;
      if (r.residual.ratio <= 1.2) ++ratio_ok;
    }
  }
  out["failures"] = failures;
  out["bins"] = bins;
  if (!all_t_adapt.empty()) {
    const double med_a = quartiles(all_t_adapt).median;
    const double med_r = quartiles(all_t_resolve).median;
    out["speedup"] = med_a > 0.0 ? med_r / med_a : 0.0;
  }
  const size_t ok_total = records.size() - static_cast<size_t>(failures);
  if (ok_total > 0) {
    out["share_orient_le_0.1rad"] = static_cast<double>(orient_ok) / static_cast<double>(ok_total);
    if (ratio_total > 0)
      out["share_ratio_le_1.2"] = static_cast<double>(ratio_ok) / static_cast<double>(ratio_total);
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const Scenario& scenario, const BenchmarkOptions& opts) {
  Scenario sc = scenario;  // local copy so overrides do not touch the caller's
  if (opts.trials_override) sc.perturbation.count = *opts.trials_override;
  if (opts.seed_override) sc.perturbation.seed = *opts.seed_override;

  const BoxBounds bounds = BoxBounds::tile(sc.model.lower_limits, sc.model.upper_limits, sc.m);
  const DecisionVector seed_traj = interpolate_seed(sc.q_start, sc.q_end, sc.m);

  BenchmarkResult result;
  result.prior = solve(sc.prior, sc.model, sc.weights, seed_traj, bounds, sc.solver_options);
  if (opts.verbose)
    std::cerr << "prior: cost " << result.prior.cost << ", " << result.prior.iterations
              << " iters, converged=" << result.prior.converged << "\n";

  Rng rng(sc.perturbation.seed);
  const std::vector<Perturbation> perturbations = generate_perturbations(sc, rng);

  int failures = 0;
  for (size_t i = 0; i < perturbations.size(); ++i) {
    MetricsRecord rec;
    rec.trial_id = static_cast<int>(i);
    rec.magnitude_m = perturbations[i].magnitude_m;
    try {
      auto [xi_adapt, report] = adapt(result.prior, sc.prior, perturbations[i].target, sc.model,
                                      sc.weights, bounds, sc.adapt_options);
      const Solution resolved = resolve_warm(result.prior, perturbations[i].target, sc.model,
                                             sc.weights, bounds, sc.solver_options);
      rec.orient_linf_rad = orientation_metric(fk_along_trajectory(sc.model, xi_adapt),
                                               fk_along_trajectory(sc.model, resolved.xi_star));
      rec.residual =
          task_residual_ratio(xi_adapt, resolved.xi_star, perturbations[i].target, sc.model);
      rec.smooth_diff = smoothness_metric(xi_adapt, resolved.xi_star);
      rec.t_adapt_s = report.wall_time_s;
      rec.t_resolve_s = resolved.wall_time_s;
      rec.adapt_termination = to_string(report.termination);
    } catch (const std::exception& e) {
      ++failures;
      rec.orient_linf_rad = std::numeric_limits<double>::quiet_NaN();
      rec.residual.ratio = std::numeric_limits<double>::quiet_NaN();
      rec.smooth_diff = std::numeric_limits<double>::quiet_NaN();
      rec.adapt_termination = "error";
      if (opts.verbose) std::cerr << "trial " << i << " failed: " << e.what() << "\n";
    }
    if (opts.verbose)
      std::cerr << "trial " << i << ": " << to_csv_row(rec) << "\n";
    result.records.push_back(std::move(rec));
  }

  if (failures * 2 > static_cast<int>(perturbations.size()))
    throw std::runtime_error("run_benchmark: more than half of the trials failed");

  result.summary_json = summarize(result.records, sc).dump(2);
  return result;
}

void write_benchmark_outputs(const BenchmarkResult& result, const std::string& out_dir,
                             bool zero_times) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream csv(dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
    csv << metrics_csv_header() << "\n";
    for (MetricsRecord r : result.records) {
      if (zero_times) {
        r.t_adapt_s = 0.0;
        r.t_resolve_s = 0.0;
      }
      csv << to_csv_row(r) << "\n";
    }
  }
  {
    std::ofstream js(dir / "summary.json");
    if (!js) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    js << result.summary_json << "\n";
  }
}

}  // namespace trajadapt
