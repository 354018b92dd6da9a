#pragma once

// Feedback modification of a vector field: given the extended dynamics X and a
// Lyapunov function V = 1/2 (f(x) - f(x0))^T K (f(x) - f(x0)) built from the
// manifold constraint and first integrals f, integrate X - grad V instead of X.
// The two fields agree on V^{-1}(0), which becomes a local attractor.
//
// The closed-form gradients in each system header are the production path;
// generic_gradient() assembles Df^T K (f(x) - f(x0)) from a FirstIntegralMap and
// is kept as an independent cross-check.

#include <functional>
#include <stdexcept>
#include <utility>

#include "fbi/numerics.hpp"

namespace fbi {

/// Stacked first integrals f = (f0, f1, ..., fl) with the action of Df^T.
template <typename Scalar>
struct FirstIntegralMap {
  using Vector = VectorX<Scalar>;

  Eigen::Index dim_state = 0;
  Eigen::Index dim_values = 0;
  std::function<Vector(const Vector&)> eval;
  // (x, w) -> Df(x)^T w
  std::function<Vector(const Vector&, const Vector&)> jacobian_transpose_apply;

  Vector operator()(const Vector& x) const { return eval(x); }

  /// Dense Df(x)^T (dim_state x dim_values), one column per basis vector.
  MatrixX<Scalar> jacobian_transpose(const Vector& x) const {
    MatrixX<Scalar> jt(dim_state, dim_values);
    Vector e = Vector::Zero(dim_values);
    for (Eigen::Index j = 0; j < dim_values; ++j) {
      e(j) = Scalar(1);
      jt.col(j) = jacobian_transpose_apply(x, e);
      e(j) = Scalar(0);
    }
    return jt;
  }
};

/// Reference values f(x0) and the diagonal of the gain matrix K.
template <typename Scalar>
struct FeedbackSpec {
  VectorX<Scalar> reference;
  VectorX<Scalar> gain_diag;

  void validate(Eigen::Index dim_values) const {
    if (reference.size() != dim_values || gain_diag.size() != dim_values) {
      throw std::invalid_argument("FeedbackSpec: reference/gain length does not match the integral map");
    }
    if (!(gain_diag.array() > Scalar(0)).all()) {
      throw std::invalid_argument("FeedbackSpec: gains must be positive");
    }
  }
};

namespace detail {

template <typename Scalar>
void check_finite_state(const VectorX<Scalar>& x) {
  if (!x.allFinite()) throw DomainError("state has non-finite entries");
}

}  // namespace detail

/// grad V(x) = Df(x)^T K (f(x) - f(x0)).
template <typename Scalar>
VectorX<Scalar> generic_gradient(const FirstIntegralMap<Scalar>& f, const FeedbackSpec<Scalar>& spec,
                                 const VectorX<Scalar>& x) {
  spec.validate(f.dim_values);
  detail::check_finite_state(x);
  const VectorX<Scalar> weighted = spec.gain_diag.cwiseProduct(f(x) - spec.reference);
  return f.jacobian_transpose_apply(x, weighted);
}

/// V(x) = 1/2 (f(x) - f(x0))^T K (f(x) - f(x0)).
template <typename Scalar>
Scalar lyapunov_value(const FirstIntegralMap<Scalar>& f, const FeedbackSpec<Scalar>& spec,
                      const VectorX<Scalar>& x) {
  spec.validate(f.dim_values);
  detail::check_finite_state(x);
  const VectorX<Scalar> delta = f(x) - spec.reference;
  return Scalar(0.5) * delta.dot(spec.gain_diag.cwiseProduct(delta));
}

/// X(x) - grad V(x).
template <typename BaseField, typename Gradient>
class FeedbackField {
 public:
  FeedbackField(BaseField base, Gradient gradient)
      : base_(std::move(base)), gradient_(std::move(gradient)) {}

  template <typename State>
  State operator()(const State& x) const {
    State out = base_(x);
    out -= gradient_(x);
    return out;
  }

  const BaseField& base_field() const { return base_; }
  const Gradient& gradient() const { return gradient_; }

 private:
  BaseField base_;
  Gradient gradient_;
};

/// X(x) - A(x) grad V(x), with A(x) + A(x)^T positive definite.
template <typename BaseField, typename Gradient, typename MatrixGain>
class GainedFeedbackField {
 public:
  GainedFeedbackField(BaseField base, Gradient gradient, MatrixGain gain)
      : base_(std::move(base)), gradient_(std::move(gradient)), gain_(std::move(gain)) {}

  template <typename State>
  State operator()(const State& x) const {
    State out = base_(x);
    const State g = gradient_(x);
    out -= gain_(x) * g;
    return out;
  }

 private:
  BaseField base_;
  Gradient gradient_;
  MatrixGain gain_;
};

template <typename BaseField, typename Gradient>
FeedbackField<BaseField, Gradient> make_feedback_field(BaseField base, Gradient gradient) {
  return {std::move(base), std::move(gradient)};
}

template <typename BaseField, typename Gradient, typename MatrixGain>
GainedFeedbackField<BaseField, Gradient, MatrixGain> make_feedback_field(BaseField base, Gradient gradient,
                                                                         MatrixGain gain) {
  return {std::move(base), std::move(gradient), std::move(gain)};
}

/// Callable wrapping generic_gradient for use as the gradient of a FeedbackField.
template <typename Scalar>
auto make_generic_gradient(FirstIntegralMap<Scalar> f, FeedbackSpec<Scalar> spec) {
  spec.validate(f.dim_values);
  return [f = std::move(f), spec = std::move(spec)](const VectorX<Scalar>& x) {
    return generic_gradient(f, spec, x);
  };
}

}  // namespace fbi
