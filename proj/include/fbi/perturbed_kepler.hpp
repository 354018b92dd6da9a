#pragma once

// Rotationally symmetric perturbed Kepler problem v' = -U'(|x|) x/|x| with the
// first integrals E = |v|^2/2 + U(|x|) and L = x x v:
//
//   V(x, v) = k1/2 (E - E0)^2 + k2/2 |L - L0|^2

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbi/feedback.hpp"
#include "fbi/integrators.hpp"
#include "fbi/kepler.hpp"
#include "fbi/numerics.hpp"

namespace fbi {

template <typename Scalar>
struct RadialPotential {
  std::function<Scalar(Scalar)> u;
  std::function<Scalar(Scalar)> u_prime;
};

/// U(r) = -mu/r - delta/r^3.
template <typename Scalar>
RadialPotential<Scalar> inverse_cube_perturbed_potential(Scalar mu, Scalar delta) {
  return {[mu, delta](Scalar r) { return -mu / r - delta / (r * r * r); },
          [mu, delta](Scalar r) {
            const Scalar r2 = r * r;
            return mu / r2 + Scalar(3) * delta / (r2 * r2);
          }};
}

template <typename Scalar>
struct PerturbedKeplerParams {
  RadialPotential<Scalar> potential = inverse_cube_perturbed_potential(Scalar(1), Scalar(0.0025));
  Scalar k1 = 2;
  Scalar k2 = 3;
  Scalar E0 = Scalar(-0.5390625);
  Vec3<Scalar> L0 = Vec3<Scalar>(0, 0, Scalar(0.8));

  void validate() const {
    if (!potential.u || !potential.u_prime) throw std::invalid_argument("perturbed kepler: potential is not set");
    if (!(k1 > 0 && k2 > 0)) throw std::invalid_argument("perturbed kepler: gains must be positive");
    if (!(L0.norm() > 0)) throw std::invalid_argument("perturbed kepler: L0 must be nonzero");
  }

  static PerturbedKeplerParams from_initial(RadialPotential<Scalar> potential, Scalar k1, Scalar k2,
                                            const OrbitalState<Scalar>& s0);
};

/// x(0) = (1 - e, 0, 0), v(0) = (0, sqrt((1 + e)/(1 - e)), 0).
template <typename Scalar>
OrbitalState<Scalar> pk_default_initial_state(Scalar e = Scalar(0.6)) {
  using std::sqrt;
  return {Vec3<Scalar>(Scalar(1) - e, 0, 0), Vec3<Scalar>(0, sqrt((Scalar(1) + e) / (Scalar(1) - e)), 0)};
}

template <typename Scalar>
struct PerturbedKeplerInvariants {
  Scalar E;
  Vec3<Scalar> L;
};

template <typename Scalar>
Scalar checked_potential_derivative(const PerturbedKeplerParams<Scalar>& p, Scalar r) {
  const Scalar du = p.potential.u_prime(r);
  if (!std::isfinite(static_cast<double>(du))) throw DomainError("potential derivative is not finite");
  return du;
}

/// (v, -U'(|x|) x/|x|).
template <typename Scalar>
OrbitalState<Scalar> pk_field(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  return {s.v, (-checked_potential_derivative(p, r) / r) * s.x};
}

template <typename Scalar>
PerturbedKeplerInvariants<Scalar> pk_invariants(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  return {Scalar(0.5) * s.v.squaredNorm() + p.potential.u(r), s.x.cross(s.v)};
}

template <typename Scalar>
PerturbedKeplerParams<Scalar> PerturbedKeplerParams<Scalar>::from_initial(RadialPotential<Scalar> potential, Scalar k1,
                                                                          Scalar k2, const OrbitalState<Scalar>& s0) {
  PerturbedKeplerParams p;
  p.potential = std::move(potential);
  p.k1 = k1;
  p.k2 = k2;
  const auto inv = pk_invariants(p, s0);
  p.E0 = inv.E;
  p.L0 = inv.L;
  p.validate();
  return p;
}

template <typename Scalar>
Scalar pk_lyapunov_value(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const auto inv = pk_invariants(p, s);
  const Scalar dE = inv.E - p.E0;
  return p.k1 / Scalar(2) * dE * dE + p.k2 / Scalar(2) * (inv.L - p.L0).squaredNorm();
}

/// grad_x V = k1 dE U'(|x|) x/|x| + k2 v x dL,  grad_v V = k1 dE v + k2 dL x x.
template <typename Scalar>
OrbitalState<Scalar> pk_lyapunov_gradient(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  const Scalar dE = Scalar(0.5) * s.v.squaredNorm() + p.potential.u(r) - p.E0;
  const Vec3<Scalar> dL = s.x.cross(s.v) - p.L0;
  OrbitalState<Scalar> g;
  g.x = (p.k1 * dE * checked_potential_derivative(p, r) / r) * s.x + p.k2 * s.v.cross(dL);
  g.v = p.k1 * dE * s.v + p.k2 * dL.cross(s.x);
  return g;
}

template <typename Scalar>
OrbitalState<Scalar> pk_modified_field(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const OrbitalState<Scalar> f = pk_field(p, s);
  const OrbitalState<Scalar> g = pk_lyapunov_gradient(p, s);
  return {f.x - g.x, f.v - g.v};
}

// ---------------------------------------------------------------------------
// Solvability hypothesis: no r > 0 with both
//   E0 = r U'(r)/2 + U(r)   and   |L0|^2 = r^3 U'(r)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct HypothesisRoot {
  Scalar r;                // root of r^3 U'(r) - |L0|^2
  Scalar energy_residual;  // |E0 - r U'(r)/2 - U(r)| at that root
};

template <typename Scalar>
struct HypothesisReport {
  bool satisfied = true;
  std::vector<HypothesisRoot<Scalar>> roots;
  Scalar r_min = 0;
  Scalar r_max = 0;
  long n_grid = 0;
  Scalar tolerance = Scalar(1e-9);
};

/// Brackets every sign change of g(r) = r^3 U'(r) - |L0|^2 on a log-spaced grid
/// over [r_min, r_max], refines each by bisection to 1e-12, and checks the
/// energy equation at each root. SATISFIED iff every energy residual exceeds
/// `tolerance` (vacuously so when g has no roots on the bracket).
template <typename Scalar>
HypothesisReport<Scalar> pk_check_hypothesis(const PerturbedKeplerParams<Scalar>& p, Scalar r_min = Scalar(1e-3),
                                             Scalar r_max = Scalar(1e3), long n_grid = 100000,
                                             Scalar tolerance = Scalar(1e-9)) {
  using std::abs;
  using std::exp;
  using std::log;
  if (!(r_min > 0 && r_min < r_max)) throw std::invalid_argument("pk_check_hypothesis: need 0 < r_min < r_max");
  if (n_grid < 2) throw std::invalid_argument("pk_check_hypothesis: n_grid must be at least 2");

  const Scalar l2 = p.L0.squaredNorm();
  auto g = [&](Scalar r) {
    const Scalar val = r * r * r * p.potential.u_prime(r) - l2;
    if (!std::isfinite(static_cast<double>(val))) throw DomainError("pk_check_hypothesis: non-finite potential");
    return val;
  };
  auto energy_residual = [&](Scalar r) {
    const Scalar res = abs(p.E0 - Scalar(0.5) * r * p.potential.u_prime(r) - p.potential.u(r));
    if (!std::isfinite(static_cast<double>(res))) throw DomainError("pk_check_hypothesis: non-finite potential");
    return res;
  };

  HypothesisReport<Scalar> report;
  report.r_min = r_min;
  report.r_max = r_max;
  report.n_grid = n_grid;
  report.tolerance = tolerance;

  const Scalar log_lo = log(r_min);
  const Scalar log_step = (log(r_max) - log_lo) / Scalar(n_grid - 1);
  auto grid = [&](long i) { return i == n_grid - 1 ? r_max : exp(log_lo + Scalar(i) * log_step); };

  Scalar a = grid(0);
  Scalar ga = g(a);
  if (ga == Scalar(0)) report.roots.push_back({a, energy_residual(a)});
  for (long i = 1; i < n_grid; ++i) {
    const Scalar b = grid(i);
    const Scalar gb = g(b);
    if (gb == Scalar(0)) {
      report.roots.push_back({b, energy_residual(b)});
    } else if (ga != Scalar(0) && (ga < 0) != (gb < 0)) {
      Scalar lo = a, hi = b, glo = ga;
      while (hi - lo > Scalar(1e-12)) {
        const Scalar mid = Scalar(0.5) * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const Scalar gm = g(mid);
        if (gm == Scalar(0)) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0) == (glo < 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const Scalar root = Scalar(0.5) * (lo + hi);
      report.roots.push_back({root, energy_residual(root)});
    }
    a = b;
    ga = gb;
  }
  for (const auto& root : report.roots) {
    if (!(root.energy_residual > tolerance)) report.satisfied = false;
  }
  return report;
}

/// Extent of the reference orbit through s0 over [0, horizon] (rk4, step h):
/// used as the empirical compactness check of V^{-1}(0).
template <typename Scalar>
struct OrbitExtent {
  Scalar min_radius;
  Scalar max_radius;
  Scalar max_speed;
  bool bounded;
};

template <typename Scalar>
OrbitExtent<Scalar> pk_orbit_extent(const PerturbedKeplerParams<Scalar>& p, const OrbitalState<Scalar>& s0,
                                     Scalar horizon, Scalar h, Scalar radius_limit = Scalar(1e3)) {
  auto field = [&p](const OrbitalVector<Scalar>& y) { return pack(pk_field(p, unpack_orbital<Scalar>(y))); };
  OrbitExtent<Scalar> ext{s0.x.norm(), s0.x.norm(), s0.v.norm(), true};
  const long n = static_cast<long>(std::floor(horizon / h));
  OrbitalVector<Scalar> y = pack(s0);
  for (long k = 0; k < n; ++k) {
    y = rk4_step(field, y, h);
    const Scalar r = y.template head<3>().norm();
    ext.min_radius = std::min(ext.min_radius, r);
    ext.max_radius = std::max(ext.max_radius, r);
    ext.max_speed = std::max(ext.max_speed, Scalar(y.template tail<3>().norm()));
    if (!(r < radius_limit)) {
      ext.bounded = false;
      break;
    }
  }
  return ext;
}

// ---------------------------------------------------------------------------
// First-integral map f = (E, L)
// ---------------------------------------------------------------------------

template <typename Scalar>
FirstIntegralMap<Scalar> pk_first_integral_map(const PerturbedKeplerParams<Scalar>& p) {
  FirstIntegralMap<Scalar> f;
  f.dim_state = 6;
  f.dim_values = 4;
  f.eval = [p](const VectorX<Scalar>& y) {
    const auto inv = pk_invariants(p, unpack_orbital<Scalar>(y));
    VectorX<Scalar> out(4);
    out << inv.E, inv.L;
    return out;
  };
  // Df^T = [[U'(|x|) x/|x|, hat(v)], [v, -hat(x)]]
  f.jacobian_transpose_apply = [p](const VectorX<Scalar>& y, const VectorX<Scalar>& w) {
    const auto s = unpack_orbital<Scalar>(y);
    const Scalar r = checked_radius(s);
    const Vec3<Scalar> wL = w.template tail<3>();
    VectorX<Scalar> out(6);
    out.template head<3>() = (w(0) * checked_potential_derivative(p, r) / r) * s.x + hat(s.v) * wL;
    out.template tail<3>() = w(0) * s.v - hat(s.x) * wL;
    return out;
  };
  return f;
}

template <typename Scalar>
FeedbackSpec<Scalar> pk_feedback_spec(const PerturbedKeplerParams<Scalar>& p) {
  FeedbackSpec<Scalar> spec;
  spec.reference.resize(4);
  spec.reference << p.E0, p.L0;
  spec.gain_diag.resize(4);
  spec.gain_diag << p.k1, p.k2, p.k2, p.k2;
  return spec;
}

template <typename Scalar>
class PerturbedKeplerSystem {
 public:
  static constexpr int kDim = 6;
  static constexpr int kMetrics = 2;
  using State = OrbitalVector<Scalar>;
  using Metrics = Eigen::Matrix<Scalar, kMetrics, 1>;

  explicit PerturbedKeplerSystem(PerturbedKeplerParams<Scalar> params) : params_(std::move(params)) {
    params_.validate();
  }

  const PerturbedKeplerParams<Scalar>& params() const { return params_; }

  State field(const State& y) const { return pack(pk_field(params_, unpack_orbital<Scalar>(y))); }
  State gradient(const State& y) const { return pack(pk_lyapunov_gradient(params_, unpack_orbital<Scalar>(y))); }
  State modified_field(const State& y) const { return pack(pk_modified_field(params_, unpack_orbital<Scalar>(y))); }
  Scalar lyapunov(const State& y) const { return pk_lyapunov_value(params_, unpack_orbital<Scalar>(y)); }

  template <typename Vector>
  Vector acceleration(const Vector& q) const {
    const OrbitalState<Scalar> s{Vec3<Scalar>(q), Vec3<Scalar>::Zero()};
    return Vector(pk_field(params_, s).v);
  }

  /// |E - E(x0)|, |L - L(x0)|.
  Metrics metrics(const State& y, const State& y0) const {
    const auto now = pk_invariants(params_, unpack_orbital<Scalar>(y));
    const auto ref = pk_invariants(params_, unpack_orbital<Scalar>(y0));
    using std::abs;
    return Metrics(abs(now.E - ref.E), (now.L - ref.L).norm());
  }

  FirstIntegralMap<Scalar> integral_map() const { return pk_first_integral_map(params_); }
  FeedbackSpec<Scalar> feedback_spec() const { return pk_feedback_spec(params_); }
  FirstIntegralMap<Scalar> constraint_map() const { return pk_first_integral_map(params_); }
  VectorX<Scalar> constraint_target() const { return pk_feedback_spec(params_).reference; }

  static std::vector<std::string> state_names() { return {"x1", "x2", "x3", "v1", "v2", "v3"}; }
  static std::vector<std::string> metric_names() { return {"dE", "dL"}; }

 private:
  PerturbedKeplerParams<Scalar> params_;
};

}  // namespace fbi
