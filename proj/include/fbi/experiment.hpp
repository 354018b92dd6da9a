#pragma once

// Experiment runner: system x method x step-size runs with CSV drift traces.
// Everything at this level is double precision.

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fbi/numerics.hpp"

namespace fbi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SystemKind { RigidBody, Kepler, PerturbedKepler };

enum class Method {
  FeedbackEuler,
  FeedbackRK4,
  Euler,
  RK4,
  ProjectionEuler,
  Splitting,       // rigid body only
  StormerVerletA,  // Kepler family only
  StormerVerletB,
};

std::string to_string(SystemKind system);
std::string to_string(Method method);
SystemKind parse_system(std::string_view name);
Method parse_method(std::string_view name);
bool is_compatible(SystemKind system, Method method);

struct ExperimentConfig {
  SystemKind system = SystemKind::RigidBody;
  Method method = Method::FeedbackEuler;
  double h = 1e-4;
  double t_end = 1000;
  // k0, k1, k2 (rigid body) or k1, k2 (Kepler family).
  std::map<std::string, double> gains;
  // inertia (rigid body); mu (Kepler); mu, delta, e (perturbed Kepler);
  // projection_tol, projection_max_iter (all).
  std::map<std::string, std::vector<double>> params;
  // Empty means the protocol default. Keys: R, Omega (rigid body); x, v (orbital).
  std::map<std::string, std::vector<double>> initial_condition;
  std::string output_path;
  long sample_stride = 1;

  /// Throws ConfigError on incompatible or out-of-range settings.
  void validate() const;
  /// floor(t_end / h), robust to the rounding of the division.
  long step_count() const;
};

/// The reference protocol for a system (gains, step size, horizon, tolerances).
ExperimentConfig default_config(SystemKind system);

/// key = value text with [run], [gains], [params], [initial] sections.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& cfg);

/// "k0=50,k1=100" style overrides.
std::map<std::string, double> parse_gain_list(std::string_view text);

struct RunSummary {
  SystemKind system = SystemKind::RigidBody;
  Method method = Method::FeedbackEuler;
  std::vector<std::string> metric_names;  // system metrics followed by "V"
  std::vector<double> max_drift;          // aligned with metric_names
  double final_v = 0;
  double wall_time = 0;  // seconds
  long steps_taken = 0;
  bool ok = true;
  std::string error;      // set when a mid-run violation stopped the run
  long failed_step = -1;
};

/// Called for every step k = 0..n with t = k h and the flat state.
using StepObserver = std::function<void(long k, double t, const Eigen::Ref<const VectorXd>& x)>;

/// Runs one configuration and writes the CSV trace to `csv` (may be null).
/// Mid-run domain violations are reported in the summary after the partial
/// trace has been flushed; configuration errors throw ConfigError first.
RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream* csv, const StepObserver& observer = {});

/// Same, writing to cfg.output_path when it is nonempty.
RunSummary run_experiment(const ExperimentConfig& cfg);

/// CSV header for a system: t, state components, V, metric columns.
std::vector<std::string> csv_columns(SystemKind system);

/// Formats a double with 17 significant digits.
std::string format_real(double value);

// ---------------------------------------------------------------------------
// Figure replication
// ---------------------------------------------------------------------------

struct FigureCurve {
  Method method;
  ExperimentConfig config;
};

struct FigurePlan {
  std::string id;
  SystemKind system;
  double reference_horizon;
  std::vector<FigureCurve> curves;
};

struct FigureOutput {
  Method method;
  std::string path;
  RunSummary summary;
};

/// Runs for figure F1..F10 at `scale` times the reference horizon.
FigurePlan plan_figure(std::string_view figure_id, double scale);

/// Executes the plan, one CSV per curve under out_dir. Curves run concurrently.
std::vector<FigureOutput> replicate_figure(std::string_view figure_id, double scale, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Validators (the `check` subcommand)
// ---------------------------------------------------------------------------

struct CheckItem {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<CheckItem> run_checks(SystemKind system);

}  // namespace fbi
