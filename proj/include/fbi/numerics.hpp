#pragma once

// Fixed-size vector/matrix primitives shared by every system in the library.
// All dense types are Eigen types templated on the scalar; 3x3 matrices are
// stored row-major so the gradient formulas read the same way they are written.

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fbi {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using VectorXd = VectorX<double>;
using MatrixXd = MatrixX<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A state lies outside the domain of a map (origin for orbital systems,
/// non-finite entries).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A scheme produced a non-finite state; carries the step index.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& message, long step)
      : std::runtime_error(step < 0 ? message : message + " (step " + std::to_string(step) + ")"),
        message_(message),
        step_(step) {}
  /// Index of the failing step, or -1 when raised outside a driver loop.
  long step() const noexcept { return step_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  long step_;
};

/// Simplified Newton in the projection method did not reach the tolerance.
class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Constraint Gram matrix is numerically singular.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Hat map: hat(u) * v == u.cross(v).
template <typename Scalar>
Mat3<Scalar> hat(const Vec3<Scalar>& u) {
  Mat3<Scalar> m;
  m << Scalar(0), -u.z(), u.y(),
       u.z(), Scalar(0), -u.x(),
      -u.y(), u.x(), Scalar(0);
  return m;
}

/// sqrt(trace(A^T A)).
template <typename Derived>
typename Derived::Scalar frobenius_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

/// Diagonal inertia tensor from principal moments.
template <typename Scalar>
Mat3<Scalar> diag3(const Vec3<Scalar>& d) {
  Mat3<Scalar> m = Mat3<Scalar>::Zero();
  m(0, 0) = d.x();
  m(1, 1) = d.y();
  m(2, 2) = d.z();
  return m;
}

/// Rotation by `angle` about principal axis `axis` (0, 1 or 2), right-handed.
template <typename Scalar>
Mat3<Scalar> axis_rotation(int axis, Scalar angle) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(angle);
  const Scalar s = sin(angle);
  Mat3<Scalar> m = Mat3<Scalar>::Identity();
  const int i = (axis + 1) % 3;
  const int j = (axis + 2) % 3;
  m(i, i) = c;
  m(i, j) = -s;
  m(j, i) = s;
  m(j, j) = c;
  return m;
}

}  // namespace fbi
