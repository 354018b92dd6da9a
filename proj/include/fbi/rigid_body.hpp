#pragma once

// Free rigid body on SO(3) x R^3, extended to R^{3x3} x R^3 so that R is an
// arbitrary 3x3 matrix. First integrals: kinetic energy E and spatial angular
// momentum pi = R I Omega; the manifold constraint is R^T R = I.
//
//   V(R, Omega) = k0/4 |R^T R - I|^2 + k1/2 (E - E0)^2 + k2/2 |pi - pi0|^2
//
// Flat state layout: R row-major in entries 0..8, Omega in 9..11.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbi/feedback.hpp"
#include "fbi/integrators.hpp"
#include "fbi/numerics.hpp"

namespace fbi {

template <typename Scalar>
struct RigidBodyState {
  Mat3<Scalar> R = Mat3<Scalar>::Identity();
  Vec3<Scalar> Omega = Vec3<Scalar>::Zero();
};

template <typename Scalar>
using RigidBodyVector = Eigen::Matrix<Scalar, 12, 1>;

template <typename Scalar>
RigidBodyVector<Scalar> pack(const RigidBodyState<Scalar>& s) {
  RigidBodyVector<Scalar> x;
  x.template head<9>() = Eigen::Map<const Eigen::Matrix<Scalar, 9, 1>>(s.R.data());
  x.template tail<3>() = s.Omega;
  return x;
}

template <typename Scalar, typename Derived>
RigidBodyState<Scalar> unpack_rigid_body(const Eigen::MatrixBase<Derived>& x) {
  RigidBodyState<Scalar> s;
  s.R = Eigen::Map<const Mat3<Scalar>>(x.derived().data());
  s.Omega = x.template tail<3>();
  return s;
}

template <typename Scalar>
struct RigidBodyIntegrals {
  Scalar E;
  Vec3<Scalar> pi;
};

/// Principal moments, gains, and the target integrals (E0, pi0).
template <typename Scalar>
struct RigidBodyParams {
  Vec3<Scalar> inertia = Vec3<Scalar>(3, 2, 1);
  Scalar k0 = 50;
  Scalar k1 = 100;
  Scalar k2 = 50;
  Scalar E0 = 3;
  Vec3<Scalar> pi0 = Vec3<Scalar>(3, 2, 1);

  void validate() const {
    if (!(inertia.array() > Scalar(0)).all()) throw std::invalid_argument("rigid body: inertia must be positive");
    if (!(k0 > 0 && k1 > 0 && k2 > 0)) throw std::invalid_argument("rigid body: gains must be positive");
    if (!(E0 > 0)) throw std::invalid_argument("rigid body: E0 must be positive");
    if (!(pi0.norm() > 0)) throw std::invalid_argument("rigid body: pi0 must be nonzero");
  }

  /// Targets taken from (R0, Omega0); R0 is expected to be a rotation.
  static RigidBodyParams from_initial(const Vec3<Scalar>& inertia, Scalar k0, Scalar k1, Scalar k2,
                                      const RigidBodyState<Scalar>& s0) {
    RigidBodyParams p;
    p.inertia = inertia;
    p.k0 = k0;
    p.k1 = k1;
    p.k2 = k2;
    const Vec3<Scalar> m = inertia.cwiseProduct(s0.Omega);
    p.E0 = Scalar(0.5) * s0.Omega.dot(m);
    p.pi0 = s0.R * m;
    p.validate();
    return p;
  }
};

/// R(0) = I, Omega(0) = (1, 1, 1), I = diag(3, 2, 1).
template <typename Scalar>
RigidBodyState<Scalar> rb_default_initial_state() {
  return {Mat3<Scalar>::Identity(), Vec3<Scalar>(1, 1, 1)};
}

/// (R hat(Omega), I^{-1}((I Omega) x Omega)).
template <typename Scalar>
RigidBodyState<Scalar> rb_field(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s) {
  const Vec3<Scalar> m = p.inertia.cwiseProduct(s.Omega);
  return {s.R * hat(s.Omega), m.cross(s.Omega).cwiseQuotient(p.inertia)};
}

template <typename Scalar>
RigidBodyIntegrals<Scalar> rb_integrals(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s) {
  const Vec3<Scalar> m = p.inertia.cwiseProduct(s.Omega);
  return {Scalar(0.5) * s.Omega.dot(m), s.R * m};
}

template <typename Scalar>
Scalar rb_orthogonality_error(const RigidBodyState<Scalar>& s) {
  return frobenius_norm(Mat3<Scalar>(s.R.transpose() * s.R - Mat3<Scalar>::Identity()));
}

template <typename Scalar>
Scalar rb_lyapunov_value(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s) {
  const auto [E, pi] = rb_integrals(p, s);
  const Mat3<Scalar> c = s.R.transpose() * s.R - Mat3<Scalar>::Identity();
  return p.k0 / Scalar(4) * c.squaredNorm() + p.k1 / Scalar(2) * (E - p.E0) * (E - p.E0) +
         p.k2 / Scalar(2) * (pi - p.pi0).squaredNorm();
}

/// grad_R V  = k0 R (R^T R - I) + k2 (pi - pi0) Omega^T I
/// grad_Om V = k1 (E - E0) I Omega + k2 I R^T (pi - pi0)
template <typename Scalar>
RigidBodyState<Scalar> rb_lyapunov_gradient(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s) {
  const Vec3<Scalar> m = p.inertia.cwiseProduct(s.Omega);
  const Scalar dE = Scalar(0.5) * s.Omega.dot(m) - p.E0;
  const Vec3<Scalar> dpi = s.R * m - p.pi0;
  RigidBodyState<Scalar> g;
  g.R = p.k0 * s.R * (s.R.transpose() * s.R - Mat3<Scalar>::Identity()) + p.k2 * dpi * m.transpose();
  g.Omega = p.k1 * dE * m + p.k2 * p.inertia.cwiseProduct(s.R.transpose() * dpi);
  return g;
}

template <typename Scalar>
RigidBodyState<Scalar> rb_modified_field(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s) {
  const RigidBodyState<Scalar> x = rb_field(p, s);
  const RigidBodyState<Scalar> g = rb_lyapunov_gradient(p, s);
  return {x.R - g.R, x.Omega - g.Omega};
}

/// Three-rotations splitting of the free rigid body. Each sub-flow keeps one
/// body angular momentum component m_i = I_i Omega_i fixed and rotates m and R
/// rigidly about principal axis i; the factors are composed symmetrically
/// (1/2, 2/2, 3, 2/2, 1/2), giving a second-order step with R in SO(3).
template <typename Scalar>
RigidBodyState<Scalar> rb_splitting_step(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s,
                                         Scalar h) {
  detail::check_step_size(h);
  Vec3<Scalar> m = p.inertia.cwiseProduct(s.Omega);
  Mat3<Scalar> R = s.R;
  auto rotate = [&](int axis, Scalar tau) {
    const Scalar angle = tau * m(axis) / p.inertia(axis);
    m = axis_rotation(axis, -angle) * m;
    R = R * axis_rotation(axis, angle);
  };
  const Scalar half = h / Scalar(2);
  rotate(0, half);
  rotate(1, half);
  rotate(2, h);
  rotate(1, half);
  rotate(0, half);
  return {R, m.cwiseQuotient(p.inertia)};
}

/// Upper bound on the sublevel c for which V^{-1}([0, c]) is a usable basin.
template <typename Scalar>
Scalar rb_gain_bound(const RigidBodyParams<Scalar>& p) {
  using std::abs;
  return std::min({p.k0 / Scalar(4), p.k1 * abs(p.E0) / Scalar(2), p.k2 * p.pi0.squaredNorm() / Scalar(2)});
}

// ---------------------------------------------------------------------------
// First-integral maps (generic gradient oracle, projection, rank checks)
// ---------------------------------------------------------------------------

namespace detail {

// Df^T applied to weights on (R^T R, E, pi): returns the stacked state gradient.
template <typename Scalar>
RigidBodyVector<Scalar> rb_integrals_transpose_apply(const RigidBodyParams<Scalar>& p, const RigidBodyState<Scalar>& s,
                                                     const Mat3<Scalar>& w_gram, Scalar w_energy,
                                                     const Vec3<Scalar>& w_pi) {
  const Vec3<Scalar> m = p.inertia.cwiseProduct(s.Omega);
  RigidBodyState<Scalar> g;
  // d<W, R^T R> = <R (W + W^T), dR>
  g.R = s.R * (w_gram + w_gram.transpose()) + w_pi * m.transpose();
  g.Omega = w_energy * m + p.inertia.cwiseProduct(s.R.transpose() * w_pi);
  return pack(g);
}

}  // namespace detail

/// f = (vec(R^T R - I), E, pi): 13 values. Paired with rb_feedback_spec this
/// reproduces V exactly (the nine Gram entries carry gain k0/2).
template <typename Scalar>
FirstIntegralMap<Scalar> rb_first_integral_map(const RigidBodyParams<Scalar>& p) {
  FirstIntegralMap<Scalar> f;
  f.dim_state = 12;
  f.dim_values = 13;
  f.eval = [p](const VectorX<Scalar>& x) {
    const auto s = unpack_rigid_body<Scalar>(x);
    const auto [E, pi] = rb_integrals(p, s);
    const Mat3<Scalar> c = s.R.transpose() * s.R - Mat3<Scalar>::Identity();
    VectorX<Scalar> out(13);
    out.template head<9>() = Eigen::Map<const Eigen::Matrix<Scalar, 9, 1>>(c.data());
    out(9) = E;
    out.template tail<3>() = pi;
    return out;
  };
  f.jacobian_transpose_apply = [p](const VectorX<Scalar>& x, const VectorX<Scalar>& w) {
    const auto s = unpack_rigid_body<Scalar>(x);
    const Mat3<Scalar> w_gram = Eigen::Map<const Mat3<Scalar>>(w.data());
    return VectorX<Scalar>(detail::rb_integrals_transpose_apply(p, s, w_gram, w(9), Vec3<Scalar>(w.template tail<3>())));
  };
  return f;
}

template <typename Scalar>
FeedbackSpec<Scalar> rb_feedback_spec(const RigidBodyParams<Scalar>& p) {
  FeedbackSpec<Scalar> spec;
  spec.reference = VectorX<Scalar>::Zero(13);
  spec.reference(9) = p.E0;
  spec.reference.template tail<3>() = p.pi0;
  spec.gain_diag.resize(13);
  spec.gain_diag.template head<9>().setConstant(p.k0 / Scalar(2));
  spec.gain_diag(9) = p.k1;
  spec.gain_diag.template tail<3>().setConstant(p.k2);
  return spec;
}

/// Independent constraints only: the six upper-triangular entries of
/// R^T R - I, then E and pi (10 values, full rank on V^{-1}(0)).
template <typename Scalar>
FirstIntegralMap<Scalar> rb_constraint_map(const RigidBodyParams<Scalar>& p) {
  static constexpr std::array<std::pair<int, int>, 6> kUpper{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};
  FirstIntegralMap<Scalar> f;
  f.dim_state = 12;
  f.dim_values = 10;
  f.eval = [p](const VectorX<Scalar>& x) {
    const auto s = unpack_rigid_body<Scalar>(x);
    const auto [E, pi] = rb_integrals(p, s);
    const Mat3<Scalar> c = s.R.transpose() * s.R - Mat3<Scalar>::Identity();
    VectorX<Scalar> out(10);
    for (std::size_t k = 0; k < kUpper.size(); ++k) out(k) = c(kUpper[k].first, kUpper[k].second);
    out(6) = E;
    out.template tail<3>() = pi;
    return out;
  };
  f.jacobian_transpose_apply = [p](const VectorX<Scalar>& x, const VectorX<Scalar>& w) {
    const auto s = unpack_rigid_body<Scalar>(x);
    Mat3<Scalar> w_gram = Mat3<Scalar>::Zero();
    for (std::size_t k = 0; k < kUpper.size(); ++k) w_gram(kUpper[k].first, kUpper[k].second) = w(k);
    return VectorX<Scalar>(detail::rb_integrals_transpose_apply(p, s, w_gram, w(6), Vec3<Scalar>(w.template tail<3>())));
  };
  return f;
}

template <typename Scalar>
VectorX<Scalar> rb_constraint_target(const RigidBodyParams<Scalar>& p) {
  VectorX<Scalar> t = VectorX<Scalar>::Zero(10);
  t(6) = p.E0;
  t.template tail<3>() = p.pi0;
  return t;
}

// ---------------------------------------------------------------------------
// Flat-state system model
// ---------------------------------------------------------------------------

template <typename Scalar>
class RigidBodySystem {
 public:
  static constexpr int kDim = 12;
  static constexpr int kMetrics = 3;
  using State = RigidBodyVector<Scalar>;
  using Metrics = Eigen::Matrix<Scalar, kMetrics, 1>;

  explicit RigidBodySystem(RigidBodyParams<Scalar> params) : params_(params) { params_.validate(); }

  const RigidBodyParams<Scalar>& params() const { return params_; }

  State field(const State& x) const { return pack(rb_field(params_, unpack_rigid_body<Scalar>(x))); }
  State gradient(const State& x) const { return pack(rb_lyapunov_gradient(params_, unpack_rigid_body<Scalar>(x))); }
  State modified_field(const State& x) const {
    return pack(rb_modified_field(params_, unpack_rigid_body<Scalar>(x)));
  }
  Scalar lyapunov(const State& x) const { return rb_lyapunov_value(params_, unpack_rigid_body<Scalar>(x)); }
  Scalar gain_bound() const { return rb_gain_bound(params_); }

  State splitting_step(const State& x, Scalar h) const {
    return pack(rb_splitting_step(params_, unpack_rigid_body<Scalar>(x), h));
  }

  /// |E - E(x0)|, |pi - pi(x0)|, |R^T R - I|.
  Metrics metrics(const State& x, const State& x0) const {
    const auto s = unpack_rigid_body<Scalar>(x);
    const auto now = rb_integrals(params_, s);
    const auto ref = rb_integrals(params_, unpack_rigid_body<Scalar>(x0));
    using std::abs;
    return Metrics(abs(now.E - ref.E), (now.pi - ref.pi).norm(), rb_orthogonality_error(s));
  }

  FirstIntegralMap<Scalar> integral_map() const { return rb_first_integral_map(params_); }
  FeedbackSpec<Scalar> feedback_spec() const { return rb_feedback_spec(params_); }
  FirstIntegralMap<Scalar> constraint_map() const { return rb_constraint_map(params_); }
  VectorX<Scalar> constraint_target() const { return rb_constraint_target(params_); }

  static std::vector<std::string> state_names() {
    return {"R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33", "Omega1", "Omega2", "Omega3"};
  }
  static std::vector<std::string> metric_names() { return {"dE", "dpi", "orth"}; }

 private:
  RigidBodyParams<Scalar> params_;
};

}  // namespace fbi
