#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "trajadapt/adapter.hpp"
#include "trajadapt/costs.hpp"
#include "trajadapt/rng.hpp"
#include "trajadapt/solver.hpp"

namespace trajadapt {

enum class BenchmarkKind { final_config, via_point, final_position };

const char* to_string(BenchmarkKind k);
BenchmarkKind benchmark_from_string(const std::string& s);

struct PerturbationSpec {
  double range_lo_frac = 0.05;  // of the model's reach proxy
  double range_hi_frac = 0.15;
  int count = 30;
  uint64_t seed = 0;
};

struct Scenario {
  BenchmarkKind benchmark = BenchmarkKind::final_config;
  std::string robot_model_path;  // resolved relative to the scenario file
  RobotModel model;
  int m = 20;
  CostWeights weights;
  TaskParameters prior;  // fully resolved (o_d and tracked targets filled in)
  Eigen::VectorXd q_start, q_end;
  PerturbationSpec perturbation;
  SolveOptions solver_options;
  AdaptOptions adapt_options;
};

Scenario load_scenario(const std::string& path);

// One perturbed task with its reported position-space magnitude.
struct Perturbation {
  TaskParameters target;
  double magnitude_m = 0.0;
};

// Draw `spec.count` perturbed parameter sets: direction uniform on the
// sphere, magnitude uniform in the configured range (meters). Joint-space
// perturbations (final_config) are scaled so that the end-effector
// displacement matches the drawn magnitude; draws violating joint limits are
// rejected and redrawn (at most 100 redraws each).
std::vector<Perturbation> generate_perturbations(const Scenario& scenario, Rng& rng);

// Max over waypoints and over {roll, pitch} of the wrapped absolute
// difference; yaw (free variable in all benchmarks) is excluded.
double orientation_metric(const std::vector<Pose>& poses_adapt,
                          const std::vector<Pose>& poses_resolve);

// Benchmark task residual in position units: for boundary tasks the distance
// between the end-effector at the final waypoint and at the commanded final
// configuration; for tracking tasks the largest end-effector distance to a
// tracked target.
double task_residual(const DecisionVector& xi, const TaskParameters& p, const RobotModel& model);

struct ResidualRatio {
  double ratio = 1.0;
  bool resolve_exact = false;  // resolve residual below 1e-12; ratio undefined
  double adapt_residual = 0.0;
  double resolve_residual = 0.0;
};

ResidualRatio task_residual_ratio(const DecisionVector& xi_adapt,
                                  const DecisionVector& xi_resolve,
                                  const TaskParameters& p_target, const RobotModel& model);

// |f_s^(1)(a) - f_s^(1)(b)|: first-order smoothness difference.
double smoothness_metric(const DecisionVector& xi_adapt, const DecisionVector& xi_resolve);

struct MetricsRecord {
  int trial_id = 0;
  double magnitude_m = 0.0;
  double orient_linf_rad = 0.0;
  ResidualRatio residual;
  double smooth_diff = 0.0;
  double t_adapt_s = 0.0;
  double t_resolve_s = 0.0;
  std::string adapt_termination;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRecord& r);
MetricsRecord metrics_from_csv_row(const std::string& line);

struct BenchmarkOptions {
  std::optional<uint64_t> seed_override;
  std::optional<int> trials_override;
  bool zero_times = false;  // write 0 in the timing columns (reproducible bytes)
  bool verbose = false;
};

struct BenchmarkResult {
  std::vector<MetricsRecord> records;
  Solution prior;
  std::string summary_json;
};

BenchmarkResult run_benchmark(const Scenario& scenario, const BenchmarkOptions& opts = {});

// Writes metrics.csv and summary.json under out_dir.
void write_benchmark_outputs(const BenchmarkResult& result, const std::string& out_dir,
                             bool zero_times);

// Quartiles with linear interpolation; used for the per-bin summary.
struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

}  // namespace trajadapt
