#include "fbi/experiment.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "fbi/integrators.hpp"
#include "fbi/kepler.hpp"
#include "fbi/perturbed_kepler.hpp"
#include "fbi/rigid_body.hpp"
#include "system_builder.hpp"

namespace fbi {

namespace {

constexpr std::array<std::pair<SystemKind, const char*>, 3> kSystemNames{{
    {SystemKind::RigidBody, "rigid_body"},
    {SystemKind::Kepler, "kepler"},
    {SystemKind::PerturbedKepler, "perturbed_kepler"},
}};

constexpr std::array<std::pair<Method, const char*>, 8> kMethodNames{{
    {Method::FeedbackEuler, "feedback_euler"},
    {Method::FeedbackRK4, "feedback_rk4"},
    {Method::Euler, "euler"},
    {Method::RK4, "rk4"},
    {Method::ProjectionEuler, "projection_euler"},
    {Method::Splitting, "splitting"},
    {Method::StormerVerletA, "stormer_verlet_a"},
    {Method::StormerVerletB, "stormer_verlet_b"},
}};

template <typename System>
std::function<typename System::State(const typename System::State&)> make_stepper(const ExperimentConfig& cfg,
                                                                                   const System& system) {
  using State = typename System::State;
  const double h = cfg.h;
  auto plain = [&system](const State& x) { return system.field(x); };
  auto modified = [&system](const State& x) { return system.modified_field(x); };
  switch (cfg.method) {
    case Method::FeedbackEuler:
      return [=](const State& x) { return euler_step(modified, x, h); };
    case Method::FeedbackRK4:
      return [=](const State& x) { return rk4_step(modified, x, h); };
    case Method::Euler:
      return [=](const State& x) { return euler_step(plain, x, h); };
    case Method::RK4:
      return [=](const State& x) { return rk4_step(plain, x, h); };
    case Method::ProjectionEuler: {
      ProjectionConfig<double> projection;
      projection.constraint = system.constraint_map();
      projection.target = system.constraint_target();
      projection.tol = detail::param_scalar(cfg, "projection_tol", 1e-8);
      projection.max_iter = static_cast<int>(detail::param_scalar(cfg, "projection_max_iter", 50));
      auto base = [](const auto& field, const State& x, double step) { return euler_step(field, x, step); };
      return [=](const State& x) { return projection_step(base, projection, plain, x, h); };
    }
    case Method::Splitting:
      if constexpr (requires(const State& x) { system.splitting_step(x, h); }) {
        return [&system, h](const State& x) { return system.splitting_step(x, h); };
      }
      break;
    case Method::StormerVerletA:
    case Method::StormerVerletB:
      if constexpr (requires(const Vec3d& q) { system.acceleration(q); }) {
        const VerletVariant variant = cfg.method == Method::StormerVerletA ? VerletVariant::A : VerletVariant::B;
        auto accel = [&system](const auto& q) { return system.acceleration(q); };
        return [=](const State& x) { return stormer_verlet_state_step(accel, x, h, variant); };
      }
      break;
  }
  throw ConfigError("method " + to_string(cfg.method) + " is not available for system " + to_string(cfg.system));
}

void write_row(std::ostream& out, double t, const double* state, long dim, double v, const double* metrics,
               long n_metrics) {
  out << format_real(t);
  for (long i = 0; i < dim; ++i) out << ',' << format_real(state[i]);
  out << ',' << format_real(v);
  for (long i = 0; i < n_metrics; ++i) out << ',' << format_real(metrics[i]);
  out << '\n';
}

template <typename System>
RunSummary run_system(const ExperimentConfig& cfg, const System& system, const typename System::State& x0,
                      std::ostream* csv, const StepObserver& observer) {
  using State = typename System::State;
  RunSummary summary;
  summary.system = cfg.system;
  summary.method = cfg.method;
  summary.metric_names = System::metric_names();
  summary.metric_names.emplace_back("V");
  summary.max_drift.assign(summary.metric_names.size(), 0.0);

  const auto stepper = make_stepper(cfg, system);
  const long n = cfg.step_count();
  const long stride = cfg.sample_stride;

  if (csv != nullptr) {
    const auto columns = csv_columns(cfg.system);
    for (std::size_t i = 0; i < columns.size(); ++i) *csv << (i ? "," : "") << columns[i];
    *csv << '\n';
  }

  long last_recorded = -1;
  auto record = [&](long k, const State& x) {
    const auto metrics = system.metrics(x, x0);
    const double v = system.lyapunov(x);
    for (int i = 0; i < metrics.size(); ++i) summary.max_drift[i] = std::max(summary.max_drift[i], metrics(i));
    summary.max_drift.back() = std::max(summary.max_drift.back(), v);
    summary.final_v = v;
    summary.steps_taken = k;
    last_recorded = k;
    const double t = static_cast<double>(k) * cfg.h;
    if (csv != nullptr && (k % stride == 0 || k == n)) {
      write_row(*csv, t, x.data(), System::kDim, v, metrics.data(), metrics.size());
    }
    if (observer) observer(k, t, x);
  };

  const auto start = std::chrono::steady_clock::now();
  try {
    iterate(stepper, x0, n, record);
  } catch (const IntegrationError& e) {
    summary.ok = false;
    summary.error = e.message();
    summary.failed_step = e.step() >= 0 ? e.step() : last_recorded + 1;
  } catch (const DomainError& e) {
    summary.ok = false;
    summary.error = e.what();
    summary.failed_step = last_recorded + 1;
  } catch (const ProjectionError& e) {
    summary.ok = false;
    summary.error = e.what();
    summary.failed_step = last_recorded + 1;
  } catch (const RankError& e) {
    summary.ok = false;
    summary.error = e.what();
    summary.failed_step = last_recorded + 1;
  }
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (csv != nullptr) csv->flush();
  return summary;
}

}  // namespace

std::string to_string(SystemKind system) {
  for (const auto& [kind, name] : kSystemNames) {
    if (kind == system) return name;
  }
  return "unknown";
}

std::string to_string(Method method) {
  for (const auto& [kind, name] : kMethodNames) {
    if (kind == method) return name;
  }
  return "unknown";
}

SystemKind parse_system(std::string_view name) {
  for (const auto& [kind, text] : kSystemNames) {
    if (name == text) return kind;
  }
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

Method parse_method(std::string_view name) {
  for (const auto& [kind, text] : kMethodNames) {
    if (name == text) return kind;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_compatible(SystemKind system, Method method) {
  switch (method) {
    case Method::Splitting:
      return system == SystemKind::RigidBody;
    case Method::StormerVerletA:
    case Method::StormerVerletB:
      return system != SystemKind::RigidBody;
    default:
      return true;
  }
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<std::string> csv_columns(SystemKind system) {
  std::vector<std::string> cols{"t"};
  auto append = [&cols](const std::vector<std::string>& more) { cols.insert(cols.end(), more.begin(), more.end()); };
  switch (system) {
    case SystemKind::RigidBody:
      append(RigidBodySystem<double>::state_names());
      cols.emplace_back("V");
      append(RigidBodySystem<double>::metric_names());
      break;
    case SystemKind::Kepler:
      append(KeplerSystem<double>::state_names());
      cols.emplace_back("V");
      append(KeplerSystem<double>::metric_names());
      break;
    case SystemKind::PerturbedKepler:
      append(PerturbedKeplerSystem<double>::state_names());
      cols.emplace_back("V");
      append(PerturbedKeplerSystem<double>::metric_names());
      break;
  }
  return cols;
}

RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream* csv, const StepObserver& observer) {
  cfg.validate();
  return detail::with_system(cfg, [&](const auto& system, const auto& x0) {
    return run_system(cfg, system, x0, csv, observer);
  });
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.output_path.empty()) return run_experiment(cfg, nullptr);
  std::ofstream out(cfg.output_path);
  if (!out) throw ConfigError("cannot open output file '" + cfg.output_path + "'");
  return run_experiment(cfg, &out);
}

}  // namespace fbi
