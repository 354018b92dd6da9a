#pragma once

// Random states in each system's sampling box, for validators and tests.

#include <random>

#include <Eigen/Geometry>

#include "fbi/kepler.hpp"
#include "fbi/numerics.hpp"
#include "fbi/rigid_body.hpp"

namespace fbi {

template <typename Scalar, typename Rng>
Mat3<Scalar> random_rotation(Rng& rng) {
  std::normal_distribution<Scalar> normal(0, 1);
  Eigen::Quaternion<Scalar> q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

template <typename Scalar, typename Rng>
Vec3<Scalar> random_vec3(Rng& rng, Scalar lo, Scalar hi) {
  std::uniform_real_distribution<Scalar> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

/// R a rotation times (I + E) with |E_ij| <= spread, det R > 0; Omega in [-2, 2]^3.
template <typename Scalar, typename Rng>
RigidBodyState<Scalar> random_rigid_body_state(Rng& rng, Scalar spread = Scalar(0.3)) {
  std::uniform_real_distribution<Scalar> u(-spread, spread);
  for (;;) {
    Mat3<Scalar> e;
    for (int i = 0; i < 9; ++i) e.data()[i] = u(rng);
    const Mat3<Scalar> R = random_rotation<Scalar>(rng) * (Mat3<Scalar>::Identity() + e);
    if (R.determinant() > Scalar(0)) return {R, random_vec3<Scalar>(rng, -2, 2)};
  }
}

/// x in [-2, 2]^3 with |x| >= 0.2, v in [-1.5, 1.5]^3.
template <typename Scalar, typename Rng>
OrbitalState<Scalar> random_orbital_state(Rng& rng) {
  for (;;) {
    const Vec3<Scalar> x = random_vec3<Scalar>(rng, -2, 2);
    if (x.norm() >= Scalar(0.2)) return {x, random_vec3<Scalar>(rng, Scalar(-1.5), Scalar(1.5))};
  }
}

}  // namespace fbi
