#pragma once

// Kepler two-body problem in barycentric coordinates. An elliptic orbit is
// fixed by its angular momentum L and Laplace-Runge-Lenz vector A:
//
//   V(x, v) = k1/2 |L - L0|^2 + k2/2 |A - A0|^2
//
// Flat state layout: position in 0..2, velocity in 3..5.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbi/feedback.hpp"
#include "fbi/numerics.hpp"

namespace fbi {

template <typename Scalar>
struct OrbitalState {
  Vec3<Scalar> x = Vec3<Scalar>::Zero();
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
};

template <typename Scalar>
using OrbitalVector = Eigen::Matrix<Scalar, 6, 1>;

template <typename Scalar>
OrbitalVector<Scalar> pack(const OrbitalState<Scalar>& s) {
  OrbitalVector<Scalar> out;
  out << s.x, s.v;
  return out;
}

template <typename Scalar, typename Derived>
OrbitalState<Scalar> unpack_orbital(const Eigen::MatrixBase<Derived>& y) {
  return {y.template head<3>(), y.template segment<3>(3)};
}

/// Positions closer to the origin than this are outside R^3 minus {0}.
inline constexpr double kOriginGuard = 1e-12;

template <typename Scalar>
Scalar checked_radius(const OrbitalState<Scalar>& s) {
  if (!s.x.allFinite() || !s.v.allFinite()) throw DomainError("orbital state has non-finite entries");
  const Scalar r = s.x.norm();
  if (!(r >= Scalar(kOriginGuard))) throw DomainError("orbital state at the origin");
  return r;
}

template <typename Scalar>
struct KeplerParams {
  Scalar mu = 1;
  Scalar k1 = 4;
  Scalar k2 = 2;
  Vec3<Scalar> L0 = Vec3<Scalar>(0, 0, std::sqrt(Scalar(1.8)));
  Vec3<Scalar> A0 = Vec3<Scalar>(Scalar(0.8), 0, 0);

  void validate() const {
    using std::abs;
    if (!(mu > 0)) throw std::invalid_argument("kepler: mu must be positive");
    if (!(k1 > 0 && k2 > 0)) throw std::invalid_argument("kepler: gains must be positive");
    if (!(L0.norm() > 0)) throw std::invalid_argument("kepler: L0 must be nonzero");
    if (!(A0.norm() < mu)) throw std::invalid_argument("kepler: |A0| must be below mu (elliptic orbit)");
    if (abs(L0.dot(A0)) > Scalar(1e-12) * L0.norm() * A0.norm()) {
      throw std::invalid_argument("kepler: L0 and A0 must be orthogonal");
    }
  }

  static KeplerParams from_initial(Scalar mu, Scalar k1, Scalar k2, const OrbitalState<Scalar>& s0);
};

template <typename Scalar>
struct KeplerInvariants {
  Vec3<Scalar> L;
  Vec3<Scalar> A;
  Scalar E;
};

/// x(0) = (1, 0, 0), v(0) = (0, sqrt(1.8), 0) with mu = 1: e = 0.8.
template <typename Scalar>
OrbitalState<Scalar> kepler_default_initial_state() {
  return {Vec3<Scalar>(1, 0, 0), Vec3<Scalar>(0, std::sqrt(Scalar(1.8)), 0)};
}

/// (v, -mu x / |x|^3).
template <typename Scalar>
OrbitalState<Scalar> kepler_field(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  return {s.v, (-p.mu / (r * r * r)) * s.x};
}

/// L = x x v, A = v x (x x v) - mu x/|x|, E = |v|^2/2 - mu/|x|.
template <typename Scalar>
KeplerInvariants<Scalar> kepler_invariants(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  const Vec3<Scalar> L = s.x.cross(s.v);
  return {L, s.v.cross(L) - (p.mu / r) * s.x, Scalar(0.5) * s.v.squaredNorm() - p.mu / r};
}

template <typename Scalar>
KeplerParams<Scalar> KeplerParams<Scalar>::from_initial(Scalar mu, Scalar k1, Scalar k2, const OrbitalState<Scalar>& s0) {
  KeplerParams p;
  p.mu = mu;
  p.k1 = k1;
  p.k2 = k2;
  const auto inv = kepler_invariants(p, s0);
  p.L0 = inv.L;
  p.A0 = inv.A;
  p.validate();
  return p;
}

template <typename Scalar>
Scalar kepler_lyapunov_value(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const auto inv = kepler_invariants(p, s);
  return p.k1 / Scalar(2) * (inv.L - p.L0).squaredNorm() + p.k2 / Scalar(2) * (inv.A - p.A0).squaredNorm();
}

/// grad_x V = k1 v x dL + k2 (v x (dA x v) - mu/|x| dA + mu/|x|^3 x x^T dA)
/// grad_v V = k1 dL x x + k2 ((x x v) x dA + x x (v x dA))
template <typename Scalar>
OrbitalState<Scalar> kepler_lyapunov_gradient(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const Scalar r = checked_radius(s);
  const Vec3<Scalar> L = s.x.cross(s.v);
  const Vec3<Scalar> dL = L - p.L0;
  const Vec3<Scalar> dA = s.v.cross(L) - (p.mu / r) * s.x - p.A0;
  OrbitalState<Scalar> g;
  g.x = p.k1 * s.v.cross(dL) +
        p.k2 * (s.v.cross(dA.cross(s.v)) - (p.mu / r) * dA + (p.mu / (r * r * r)) * s.x.dot(dA) * s.x);
  g.v = p.k1 * dL.cross(s.x) + p.k2 * (L.cross(dA) + s.x.cross(s.v.cross(dA)));
  return g;
}

template <typename Scalar>
OrbitalState<Scalar> kepler_modified_field(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s) {
  const OrbitalState<Scalar> f = kepler_field(p, s);
  const OrbitalState<Scalar> g = kepler_lyapunov_gradient(p, s);
  return {f.x - g.x, f.v - g.v};
}

template <typename Scalar>
Scalar kepler_gain_bound(const KeplerParams<Scalar>& p) {
  const Scalar gap = p.mu - p.A0.norm();
  return std::min(p.k1 * p.L0.squaredNorm() / Scalar(2), p.k2 * gap * gap / Scalar(2));
}

template <typename Scalar>
struct OrbitGeometry {
  Scalar semi_major_axis;
  Scalar eccentricity;
  Scalar period;
};

/// Conic elements of the (L0, A0) orbit; rejects parabolic and hyperbolic data.
template <typename Scalar>
OrbitGeometry<Scalar> orbit_geometry(const KeplerParams<Scalar>& p) {
  using std::sqrt;
  const Scalar e = p.A0.norm() / p.mu;
  if (!(e < Scalar(1))) throw DomainError("orbit_geometry: orbit is not elliptic");
  if (!(p.L0.norm() > 0)) throw DomainError("orbit_geometry: degenerate orbit with L0 = 0");
  const Scalar energy = (p.A0.squaredNorm() - p.mu * p.mu) / (Scalar(2) * p.L0.squaredNorm());
  const Scalar a = -p.mu / (Scalar(2) * energy);
  return {a, e, Scalar(2) * std::numbers::pi_v<Scalar> * sqrt(a * a * a / p.mu)};
}

/// Solves M = E - e sin E for the eccentric anomaly by Newton iteration.
template <typename Scalar>
Scalar solve_kepler_equation(Scalar mean_anomaly, Scalar e, Scalar tol = Scalar(1e-14)) {
  using std::abs;
  using std::cos;
  using std::sin;
  Scalar E = e < Scalar(0.8) ? mean_anomaly : std::numbers::pi_v<Scalar>;
  for (int i = 0; i < 100; ++i) {
    const Scalar step = (E - e * sin(E) - mean_anomaly) / (Scalar(1) - e * cos(E));
    E -= step;
    if (abs(step) <= tol) return E;
  }
  throw std::runtime_error("solve_kepler_equation: Newton iteration did not converge");
}

namespace detail {

// Orthonormal perifocal basis: P toward perihelion, Q = L0^ x P.
template <typename Scalar>
std::pair<Vec3<Scalar>, Vec3<Scalar>> perifocal_basis(const KeplerParams<Scalar>& p) {
  const Vec3<Scalar> w = p.L0.normalized();
  Vec3<Scalar> P;
  if (p.A0.norm() > Scalar(0)) {
    P = p.A0.normalized();
  } else {
    const Vec3<Scalar> seed = std::abs(w.x()) < Scalar(0.9) ? Vec3<Scalar>::UnitX() : Vec3<Scalar>::UnitY();
    P = (seed - seed.dot(w) * w).normalized();
  }
  return {P, w.cross(P)};
}

}  // namespace detail

/// Point of the (L0, A0) orbit at eccentric anomaly E (E = 0 is perihelion).
template <typename Scalar>
OrbitalState<Scalar> orbit_state_at_eccentric_anomaly(const KeplerParams<Scalar>& p, Scalar E) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const auto geo = orbit_geometry(p);
  const auto [P, Q] = detail::perifocal_basis(p);
  const Scalar a = geo.semi_major_axis;
  const Scalar e = geo.eccentricity;
  const Scalar b_over_a = sqrt(Scalar(1) - e * e);
  const Scalar r = a * (Scalar(1) - e * cos(E));
  OrbitalState<Scalar> s;
  s.x = a * (cos(E) - e) * P + a * b_over_a * sin(E) * Q;
  s.v = (sqrt(p.mu * a) / r) * (-sin(E) * P + b_over_a * cos(E) * Q);
  return s;
}

/// Exact state on the (L0, A0) orbit, time t after perihelion passage.
template <typename Scalar>
OrbitalState<Scalar> orbit_state_at_time(const KeplerParams<Scalar>& p, Scalar t) {
  using std::sqrt;
  const auto geo = orbit_geometry(p);
  const Scalar n = sqrt(p.mu / (geo.semi_major_axis * geo.semi_major_axis * geo.semi_major_axis));
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  const Scalar M = std::fmod(n * t, two_pi);
  return orbit_state_at_eccentric_anomaly(p, solve_kepler_equation(M, geo.eccentricity));
}

// ---------------------------------------------------------------------------
// First-integral maps
// ---------------------------------------------------------------------------

namespace detail {

// Df^T for (L, A), derived from the expanded forms dL = dx x v + x x dv and
// A = x |v|^2 - v (x.v) - mu x / |x|.
template <typename Scalar>
OrbitalVector<Scalar> kepler_integrals_transpose_apply(const KeplerParams<Scalar>& p, const OrbitalState<Scalar>& s,
                                                       const Vec3<Scalar>& wL, const Vec3<Scalar>& wA) {
  const Scalar r = checked_radius(s);
  const Vec3<Scalar>& x = s.x;
  const Vec3<Scalar>& v = s.v;
  OrbitalState<Scalar> g;
  g.x = v.cross(wL) + v.squaredNorm() * wA - wA.dot(v) * v - (p.mu / r) * wA + (p.mu / (r * r * r)) * x.dot(wA) * x;
  g.v = wL.cross(x) + Scalar(2) * wA.dot(x) * v - v.dot(x) * wA - wA.dot(v) * x;
  return pack(g);
}

}  // namespace detail

/// f = (L, A): six values. Note L . A = 0 identically, so Df has rank at most 5.
template <typename Scalar>
FirstIntegralMap<Scalar> kepler_first_integral_map(const KeplerParams<Scalar>& p) {
  FirstIntegralMap<Scalar> f;
  f.dim_state = 6;
  f.dim_values = 6;
  f.eval = [p](const VectorX<Scalar>& y) {
    const auto inv = kepler_invariants(p, unpack_orbital<Scalar>(y));
    VectorX<Scalar> out(6);
    out << inv.L, inv.A;
    return out;
  };
  f.jacobian_transpose_apply = [p](const VectorX<Scalar>& y, const VectorX<Scalar>& w) {
    return VectorX<Scalar>(detail::kepler_integrals_transpose_apply(
        p, unpack_orbital<Scalar>(y), Vec3<Scalar>(w.template head<3>()), Vec3<Scalar>(w.template tail<3>())));
  };
  return f;
}

template <typename Scalar>
FeedbackSpec<Scalar> kepler_feedback_spec(const KeplerParams<Scalar>& p) {
  FeedbackSpec<Scalar> spec;
  spec.reference.resize(6);
  spec.reference << p.L0, p.A0;
  spec.gain_diag.resize(6);
  spec.gain_diag << p.k1, p.k1, p.k1, p.k2, p.k2, p.k2;
  return spec;
}

/// Five independent constraints for projection: L and the two in-plane
/// components of A (plane orthogonal to L0).
template <typename Scalar>
FirstIntegralMap<Scalar> kepler_constraint_map(const KeplerParams<Scalar>& p) {
  const auto [P, Q] = detail::perifocal_basis(p);
  FirstIntegralMap<Scalar> f;
  f.dim_state = 6;
  f.dim_values = 5;
  f.eval = [p, P, Q](const VectorX<Scalar>& y) {
    const auto inv = kepler_invariants(p, unpack_orbital<Scalar>(y));
    VectorX<Scalar> out(5);
    out << inv.L, inv.A.dot(P), inv.A.dot(Q);
    return out;
  };
  f.jacobian_transpose_apply = [p, P, Q](const VectorX<Scalar>& y, const VectorX<Scalar>& w) {
    const Vec3<Scalar> wA = w(3) * P + w(4) * Q;
    return VectorX<Scalar>(
        detail::kepler_integrals_transpose_apply(p, unpack_orbital<Scalar>(y), Vec3<Scalar>(w.template head<3>()), wA));
  };
  return f;
}

template <typename Scalar>
VectorX<Scalar> kepler_constraint_target(const KeplerParams<Scalar>& p) {
  const auto [P, Q] = detail::perifocal_basis(p);
  VectorX<Scalar> t(5);
  t << p.L0, p.A0.dot(P), p.A0.dot(Q);
  return t;
}

// ---------------------------------------------------------------------------
// Flat-state system model
// ---------------------------------------------------------------------------

template <typename Scalar>
class KeplerSystem {
 public:
  static constexpr int kDim = 6;
  static constexpr int kMetrics = 3;
  using State = OrbitalVector<Scalar>;
  using Metrics = Eigen::Matrix<Scalar, kMetrics, 1>;

  explicit KeplerSystem(KeplerParams<Scalar> params) : params_(params) { params_.validate(); }

  const KeplerParams<Scalar>& params() const { return params_; }

  State field(const State& y) const { return pack(kepler_field(params_, unpack_orbital<Scalar>(y))); }
  State gradient(const State& y) const { return pack(kepler_lyapunov_gradient(params_, unpack_orbital<Scalar>(y))); }
  State modified_field(const State& y) const {
    return pack(kepler_modified_field(params_, unpack_orbital<Scalar>(y)));
  }
  Scalar lyapunov(const State& y) const { return kepler_lyapunov_value(params_, unpack_orbital<Scalar>(y)); }
  Scalar gain_bound() const { return kepler_gain_bound(params_); }

  /// Position-only acceleration for the Stormer-Verlet schemes.
  template <typename Vector>
  Vector acceleration(const Vector& q) const {
    const OrbitalState<Scalar> s{Vec3<Scalar>(q), Vec3<Scalar>::Zero()};
    return Vector(kepler_field(params_, s).v);
  }

  /// |L - L(x0)|, |A - A(x0)|, |E - E(x0)|.
  Metrics metrics(const State& y, const State& y0) const {
    const auto now = kepler_invariants(params_, unpack_orbital<Scalar>(y));
    const auto ref = kepler_invariants(params_, unpack_orbital<Scalar>(y0));
    using std::abs;
    return Metrics((now.L - ref.L).norm(), (now.A - ref.A).norm(), abs(now.E - ref.E));
  }

  FirstIntegralMap<Scalar> integral_map() const { return kepler_first_integral_map(params_); }
  FeedbackSpec<Scalar> feedback_spec() const { return kepler_feedback_spec(params_); }
  FirstIntegralMap<Scalar> constraint_map() const { return kepler_constraint_map(params_); }
  VectorX<Scalar> constraint_target() const { return kepler_constraint_target(params_); }

  static std::vector<std::string> state_names() { return {"x1", "x2", "x3", "v1", "v2", "v3"}; }
  static std::vector<std::string> metric_names() { return {"dL", "dA", "dE"}; }

 private:
  KeplerParams<Scalar> params_;
};

}  // namespace fbi
