#pragma once

// Builds the concrete system model and initial state described by a config.
// Targets (E0, pi0, L0, A0, ...) are always taken from the initial state.

#include <string>
#include <vector>

#include "fbi/experiment.hpp"
#include "fbi/kepler.hpp"
#include "fbi/perturbed_kepler.hpp"
#include "fbi/rigid_body.hpp"

namespace fbi::detail {

inline double param_scalar(const ExperimentConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return fallback;
  if (it->second.size() != 1) throw ConfigError("param '" + key + "' must be a single number");
  return it->second.front();
}

inline double gain(const ExperimentConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.gains.find(key);
  return it == cfg.gains.end() ? fallback : it->second;
}

template <int N>
Eigen::Matrix<double, N, 1> initial_vector(const ExperimentConfig& cfg, const std::string& key,
                                           const Eigen::Matrix<double, N, 1>& fallback) {
  const auto it = cfg.initial_condition.find(key);
  if (it == cfg.initial_condition.end()) return fallback;
  if (it->second.size() != static_cast<std::size_t>(N)) {
    throw ConfigError("initial '" + key + "' needs " + std::to_string(N) + " values");
  }
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(it->second.data());
}

inline RigidBodySystem<double> make_rigid_body(const ExperimentConfig& cfg, RigidBodyVector<double>* x0) {
  const auto def = rb_default_initial_state<double>();
  RigidBodyState<double> s0;
  const Eigen::Matrix<double, 9, 1> r = initial_vector<9>(cfg, "R", Eigen::Map<const Eigen::Matrix<double, 9, 1>>(def.R.data()));
  s0.R = Eigen::Map<const Mat3d>(r.data());
  s0.Omega = initial_vector<3>(cfg, "Omega", def.Omega);
  Vec3d inertia(3, 2, 1);
  if (const auto it = cfg.params.find("inertia"); it != cfg.params.end()) {
    if (it->second.size() != 3) throw ConfigError("param 'inertia' needs 3 values");
    inertia = Vec3d(it->second[0], it->second[1], it->second[2]);
  }
  try {
    auto p = RigidBodyParams<double>::from_initial(inertia, gain(cfg, "k0", 50), gain(cfg, "k1", 100),
                                                   gain(cfg, "k2", 50), s0);
    if (x0 != nullptr) *x0 = pack(s0);
    return RigidBodySystem<double>(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline OrbitalState<double> orbital_initial(const ExperimentConfig& cfg, const OrbitalState<double>& def) {
  return {initial_vector<3>(cfg, "x", def.x), initial_vector<3>(cfg, "v", def.v)};
}

inline KeplerSystem<double> make_kepler(const ExperimentConfig& cfg, OrbitalVector<double>* x0) {
  const auto s0 = orbital_initial(cfg, kepler_default_initial_state<double>());
  try {
    if (!(s0.x.norm() >= kOriginGuard)) throw std::invalid_argument("kepler: initial position at the origin");
    auto p = KeplerParams<double>::from_initial(param_scalar(cfg, "mu", 1), gain(cfg, "k1", 4), gain(cfg, "k2", 2), s0);
    if (x0 != nullptr) *x0 = pack(s0);
    return KeplerSystem<double>(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline PerturbedKeplerSystem<double> make_perturbed_kepler(const ExperimentConfig& cfg, OrbitalVector<double>* x0) {
  const auto s0 = orbital_initial(cfg, pk_default_initial_state<double>(param_scalar(cfg, "e", 0.6)));
  try {
    if (!(s0.x.norm() >= kOriginGuard)) throw std::invalid_argument("perturbed kepler: initial position at the origin");
    const double mu = param_scalar(cfg, "mu", 1);
    if (!(mu > 0)) throw std::invalid_argument("perturbed kepler: mu must be positive");
    auto p = PerturbedKeplerParams<double>::from_initial(
        inverse_cube_perturbed_potential(mu, param_scalar(cfg, "delta", 0.0025)), gain(cfg, "k1", 2),
        gain(cfg, "k2", 3), s0);
    if (x0 != nullptr) *x0 = pack(s0);
    return PerturbedKeplerSystem<double>(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// fn(system, x0) for the configured system.
template <typename Fn>
auto with_system(const ExperimentConfig& cfg, Fn&& fn) {
  switch (cfg.system) {
    case SystemKind::Kepler: {
      OrbitalVector<double> x0;
      const auto system = make_kepler(cfg, &x0);
      return fn(system, x0);
    }
    case SystemKind::PerturbedKepler: {
      OrbitalVector<double> x0;
      const auto system = make_perturbed_kepler(cfg, &x0);
      return fn(system, x0);
    }
    case SystemKind::RigidBody:
    default: {
      RigidBodyVector<double> x0;
      const auto system = make_rigid_body(cfg, &x0);
      return fn(system, x0);
    }
  }
}

}  // namespace fbi::detail
