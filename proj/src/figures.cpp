#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>

#include "fbi/experiment.hpp"
#include "fbi/kepler.hpp"

namespace fbi {

namespace {

struct FigureEntry {
  const char* id;
  SystemKind system;
};

// Figures 1-4: rigid body (Omega, energy, momentum, SO(3) drift).
// Figures 5-7: Kepler (orbit, |dA|, |dL|). Figures 8-10: perturbed Kepler (orbit, |dE|, |dL|).
constexpr FigureEntry kFigures[] = {
    {"F1", SystemKind::RigidBody}, {"F2", SystemKind::RigidBody},       {"F3", SystemKind::RigidBody},
    {"F4", SystemKind::RigidBody}, {"F5", SystemKind::Kepler},          {"F6", SystemKind::Kepler},
    {"F7", SystemKind::Kepler},    {"F8", SystemKind::PerturbedKepler}, {"F9", SystemKind::PerturbedKepler},
    {"F10", SystemKind::PerturbedKepler},
};

std::vector<Method> figure_methods(SystemKind system) {
  switch (system) {
    case SystemKind::RigidBody:
      return {Method::FeedbackEuler, Method::ProjectionEuler, Method::Splitting, Method::Euler};
    case SystemKind::Kepler:
      return {Method::FeedbackEuler, Method::ProjectionEuler, Method::StormerVerletA, Method::StormerVerletB};
    case SystemKind::PerturbedKepler:
    default:
      return {Method::FeedbackEuler, Method::ProjectionEuler, Method::StormerVerletA, Method::RK4};
  }
}

// Radial period of the default orbit; the perturbed orbit uses its Kepler
// approximation a = -mu / (2 E0).
double characteristic_period(SystemKind system) {
  switch (system) {
    case SystemKind::Kepler:
      return orbit_geometry(KeplerParams<double>{}).period;
    case SystemKind::PerturbedKepler: {
      const double a = 1.0 / (2 * 0.5390625);
      return 2 * std::numbers::pi * std::sqrt(a * a * a);
    }
    default:
      return 0;
  }
}

}  // namespace

FigurePlan plan_figure(std::string_view figure_id, double scale) {
  const FigureEntry* entry = nullptr;
  for (const auto& e : kFigures) {
    if (figure_id == e.id) entry = &e;
  }
  if (entry == nullptr) throw ConfigError("unknown figure id '" + std::string(figure_id) + "' (expected F1..F10)");
  if (!(scale > 0 && scale <= 1)) throw ConfigError("figure scale must lie in (0, 1]");

  FigurePlan plan;
  plan.id = entry->id;
  plan.system = entry->system;
  const ExperimentConfig base = default_config(entry->system);
  plan.reference_horizon = base.t_end;

  const double horizon = scale * plan.reference_horizon;
  if (const double period = characteristic_period(entry->system); period > 0 && horizon < 10 * period * (1 - 1e-9)) {
    throw ConfigError("figure " + plan.id + ": scaled horizon " + format_real(horizon) +
                      " is shorter than 10 orbital periods (" + format_real(10 * period) + ")");
  }

  for (Method method : figure_methods(entry->system)) {
    ExperimentConfig cfg = base;
    cfg.method = method;
    cfg.t_end = horizon;
    if (entry->system == SystemKind::PerturbedKepler && method == Method::RK4) cfg.h = 1e-4;
    // Keep roughly the same number of rows as the reference-horizon traces.
    cfg.sample_stride = std::max(1L, static_cast<long>(std::lround(base.sample_stride * scale)));
    if (cfg.system == SystemKind::PerturbedKepler && method == Method::RK4) {
      cfg.sample_stride = static_cast<long>(std::lround(base.h / cfg.h));
    }
    plan.curves.push_back({method, cfg});
  }
  return plan;
}

std::vector<FigureOutput> replicate_figure(std::string_view figure_id, double scale, const std::string& out_dir) {
  FigurePlan plan = plan_figure(figure_id, scale);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());

  std::vector<std::future<FigureOutput>> jobs;
  for (FigureCurve& curve : plan.curves) {
    curve.config.output_path = (std::filesystem::path(out_dir) / (plan.id + "_" + to_string(curve.method) + ".csv")).string();
    curve.config.validate();
    jobs.push_back(std::async(std::launch::async, [cfg = curve.config, method = curve.method] {
      return FigureOutput{method, cfg.output_path, run_experiment(cfg)};
    }));
  }
  std::vector<FigureOutput> outputs;
  outputs.reserve(jobs.size());
  for (auto& job : jobs) outputs.push_back(job.get());
  return outputs;
}

}  // namespace fbi
