#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fbi/diagnostics.hpp"
#include "fbi/experiment.hpp"
#include "fbi/sampling.hpp"
#include "system_builder.hpp"

namespace fbi {

namespace {

constexpr std::uint64_t kSeed = 20161;
constexpr int kOrthogonalitySamples = 10000;
constexpr int kGradientSamples = 1000;

std::string sci(double value) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << value;
  return out.str();
}

template <typename System, typename Sampler>
CheckItem orthogonality_check(const System& system, Sampler&& sample) {
  double worst = 0;
  for (int i = 0; i < kOrthogonalitySamples; ++i) worst = std::max(worst, orthogonality_residual(system, sample()));
  return {"orthogonality <grad V, X> = 0", worst <= 1e-12,
          "max |<grad V, X>| / (1 + |grad V||X|) = " + sci(worst) + " over " + std::to_string(kOrthogonalitySamples) +
              " random states"};
}

template <typename System, typename Sampler>
CheckItem gradient_check(const System& system, Sampler&& sample) {
  const auto f = system.integral_map();
  const auto spec = system.feedback_spec();
  double worst = 0;
  for (int i = 0; i < kGradientSamples; ++i) {
    const auto x = sample();
    const VectorXd analytic = system.gradient(x);
    const VectorXd generic = generic_gradient(f, spec, VectorXd(x));
    const double scale = std::max({analytic.norm(), generic.norm(), 1e-300});
    worst = std::max(worst, (analytic - generic).norm() / scale);
  }
  return {"closed-form gradient matches Df^T K (f - f0)", worst <= 1e-12,
          "max relative difference " + sci(worst) + " over " + std::to_string(kGradientSamples) + " random states"};
}

CheckItem rank_check(const std::string& name, const FirstIntegralMap<double>& f, const std::vector<VectorXd>& samples,
                     bool informational = false) {
  const auto report = check_rank_condition(f, samples);
  std::string detail = std::to_string(f.dim_values) + " x " + std::to_string(f.dim_state) +
                       " Jacobian, min singular value " + sci(report.min_singular_value) + " over " +
                       std::to_string(samples.size()) + " states";
  if (informational) detail += " (informational: " + std::string(report.pass ? "full rank" : "rank deficient") + ")";
  return {name, informational || report.pass, detail};
}

std::vector<CheckItem> rigid_body_checks() {
  const auto system = detail::make_rigid_body(default_config(SystemKind::RigidBody), nullptr);
  std::mt19937_64 rng(kSeed);
  auto sample = [&rng] { return pack(random_rigid_body_state<double>(rng)); };

  std::vector<CheckItem> items;
  items.push_back(orthogonality_check(system, sample));
  items.push_back(gradient_check(system, sample));

  // States on the exact solution set: rotations carrying the body momentum to pi0.
  std::vector<VectorXd> on_manifold;
  const auto x0 = rb_default_initial_state<double>();
  for (int i = 0; i < 64; ++i) {
    on_manifold.push_back(pack(RigidBodyState<double>{random_rotation<double>(rng), x0.Omega}));
  }
  items.push_back(rank_check("rank of (R^T R, E, pi) constraints", system.constraint_map(), on_manifold));

  const double c = system.gain_bound();
  items.push_back({"gain bound c > 0", c > 0, "c = min(k0/4, k1|E0|/2, k2|pi0|^2/2) = " + format_real(c)});
  return items;
}

std::vector<CheckItem> kepler_checks() {
  const auto system = detail::make_kepler(default_config(SystemKind::Kepler), nullptr);
  const auto& p = system.params();
  std::mt19937_64 rng(kSeed);
  auto sample = [&rng] { return pack(random_orbital_state<double>(rng)); };

  std::vector<CheckItem> items;
  items.push_back(orthogonality_check(system, sample));
  items.push_back(gradient_check(system, sample));

  const double period = orbit_geometry(p).period;
  std::vector<VectorXd> orbit;
  for (int i = 0; i < 64; ++i) orbit.push_back(pack(orbit_state_at_time(p, period * i / 64.0)));
  // L . A = 0 identically, so the six values of (L, A) carry at most rank 5.
  items.push_back(rank_check("rank of (L, A)", system.integral_map(), orbit, true));
  items.push_back(rank_check("rank of (L, in-plane A) constraints", system.constraint_map(), orbit));

  // No critical points of V inside V^{-1}((0, c]) other than the orbit itself:
  // |grad V|^2 / V stays bounded away from zero on random perturbations of the orbit.
  const double c = system.gain_bound();
  std::normal_distribution<double> normal(0, 1);
  double min_ratio = std::numeric_limits<double>::infinity();
  int tested = 0;
  for (int i = 0; i < 4000; ++i) {
    OrbitalVector<double> dir;
    for (int j = 0; j < 6; ++j) dir(j) = normal(rng);
    const OrbitalVector<double> base = orbit[static_cast<std::size_t>(i % orbit.size())];
    const double level = c * std::pow(10.0, -12.0 * (i % 13) / 12.0);
    const auto x = state_at_level(system, base, dir, level);
    const double v = system.lyapunov(x);
    if (!(v > 1e-20 && v <= c)) continue;
    min_ratio = std::min(min_ratio, system.gradient(x).squaredNorm() / v);
    ++tested;
  }
  items.push_back({"no spurious critical points of V below c", tested > 0 && min_ratio > 1e-8,
                   "min |grad V|^2 / V = " + sci(min_ratio) + " over " + std::to_string(tested) +
                       " states with 1e-20 < V <= c = " + format_real(c)});
  return items;
}

std::vector<CheckItem> perturbed_kepler_checks() {
  const ExperimentConfig cfg = default_config(SystemKind::PerturbedKepler);
  OrbitalVector<double> x0;
  const auto system = detail::make_perturbed_kepler(cfg, &x0);
  const auto& p = system.params();
  std::mt19937_64 rng(kSeed);
  auto sample = [&rng] { return pack(random_orbital_state<double>(rng)); };

  std::vector<CheckItem> items;
  items.push_back(orthogonality_check(system, sample));
  items.push_back(gradient_check(system, sample));

  // Samples along the reference orbit.
  std::vector<VectorXd> orbit{x0};
  auto field = [&system](const OrbitalVector<double>& y) { return system.field(y); };
  OrbitalVector<double> y = x0;
  for (int i = 1; i < 64; ++i) {
    for (int k = 0; k < 100; ++k) y = rk4_step(field, y, 1e-3);
    orbit.push_back(y);
  }
  items.push_back(rank_check("rank of (E, L)", system.integral_map(), orbit));

  const auto report = pk_check_hypothesis(p);
  std::ostringstream detail;
  detail << (report.satisfied ? "SATISFIED" : "VIOLATED") << ", " << report.roots.size() << " root(s) of r^3 U'(r) = |L0|^2 in ["
         << report.r_min << ", " << report.r_max << "]";
  for (const auto& root : report.roots) detail << "; r = " << format_real(root.r) << " energy residual " << sci(root.energy_residual);
  items.push_back({"no common root of the circular-orbit equations", report.satisfied, detail.str()});

  const auto extent = pk_orbit_extent(p, unpack_orbital<double>(x0), 200.0, 1e-3);
  items.push_back({"V^{-1}(0) bounded (orbit stays in a compact set)", extent.bounded && extent.min_radius > kOriginGuard,
                   "r in [" + format_real(extent.min_radius) + ", " + format_real(extent.max_radius) +
                       "], max speed " + format_real(extent.max_speed) + " over t in [0, 200]"});
  return items;
}

}  // namespace

std::vector<CheckItem> run_checks(SystemKind system) {
  switch (system) {
    case SystemKind::Kepler:
      return kepler_checks();
    case SystemKind::PerturbedKepler:
      return perturbed_kepler_checks();
    case SystemKind::RigidBody:
    default:
      return rigid_body_checks();
  }
}

}  // namespace fbi
