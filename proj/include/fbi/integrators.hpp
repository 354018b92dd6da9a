#pragma once

// One-step schemes. Every scheme maps (field, state, h) to the next state and
// works for any fixed- or dynamic-size Eigen column vector. Steps are
// stateless; a trajectory is advanced by repeated application.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "fbi/feedback.hpp"
#include "fbi/numerics.hpp"

namespace fbi {

namespace detail {

template <typename Scalar>
void check_step_size(Scalar h) {
  if (!(h > Scalar(0)) || !std::isfinite(static_cast<double>(h))) {
    throw std::invalid_argument("step size must be positive and finite");
  }
}

template <typename State>
const State& check_finite_output(const State& x, const char* scheme) {
  if (!x.allFinite()) throw IntegrationError(std::string(scheme) + ": non-finite state", -1);
  return x;
}

}  // namespace detail

/// x + h X(x).
template <typename Field, typename State, typename Scalar>
State euler_step(const Field& field, const State& x, Scalar h) {
  detail::check_step_size(h);
  State out = x + h * field(x);
  return detail::check_finite_output(out, "euler");
}

/// Classical four-stage Runge-Kutta.
template <typename Field, typename State, typename Scalar>
State rk4_step(const Field& field, const State& x, Scalar h) {
  detail::check_step_size(h);
  const Scalar half = h / Scalar(2);
  const State k1 = field(x);
  const State k2 = field(State(x + half * k1));
  const State k3 = field(State(x + half * k2));
  const State k4 = field(State(x + h * k3));
  State out = x + (h / Scalar(6)) * (k1 + Scalar(2) * (k2 + k3) + k4);
  return detail::check_finite_output(out, "rk4");
}

enum class VerletVariant {
  A,  // half kick, drift, half kick
  B,  // half drift, kick, half drift
};

/// Stormer-Verlet for q'' = a(q). Both variants are symmetric, symplectic and
/// of order 2; B is the adjoint ordering of A.
template <typename Accel, typename Vector, typename Scalar>
std::pair<Vector, Vector> stormer_verlet_step(const Accel& accel, const Vector& q, const Vector& v, Scalar h,
                                              VerletVariant variant) {
  detail::check_step_size(h);
  const Scalar half = h / Scalar(2);
  try {
    if (variant == VerletVariant::A) {
      const Vector v_half = v + half * accel(q);
      const Vector q_next = q + h * v_half;
      const Vector v_next = v_half + half * accel(q_next);
      detail::check_finite_output(q_next, "stormer-verlet");
      detail::check_finite_output(v_next, "stormer-verlet");
      return {q_next, v_next};
    }
    const Vector q_half = q + half * v;
    const Vector v_next = v + h * accel(q_half);
    const Vector q_next = q_half + half * v_next;
    detail::check_finite_output(q_next, "stormer-verlet");
    detail::check_finite_output(v_next, "stormer-verlet");
    return {q_next, v_next};
  } catch (const DomainError& e) {
    throw IntegrationError(std::string("stormer-verlet: ") + e.what(), -1);
  }
}

/// Stormer-Verlet on a stacked (q, v) state of even dimension.
template <typename Accel, typename State, typename Scalar>
State stormer_verlet_state_step(const Accel& accel, const State& x, Scalar h, VerletVariant variant) {
  const Eigen::Index n = x.size() / 2;
  constexpr int kRows = State::RowsAtCompileTime;
  using Half = Eigen::Matrix<typename State::Scalar, kRows == Eigen::Dynamic ? Eigen::Dynamic : kRows / 2, 1>;
  const Half q = x.head(n);
  const Half v = x.tail(n);
  auto half_accel = [&accel](const Half& p) -> Half { return accel(p); };
  auto [q_next, v_next] = stormer_verlet_step(half_accel, q, v, h, variant);
  State out(x.size());
  out.head(n) = q_next;
  out.tail(n) = v_next;
  return out;
}

// ---------------------------------------------------------------------------
// Standard projection method
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ProjectionConfig {
  FirstIntegralMap<Scalar> constraint;
  VectorX<Scalar> target;
  Scalar tol = Scalar(1e-8);
  int max_iter = 50;
};

/// Result of projecting one state; `iterations` counts Newton updates.
template <typename Scalar>
struct ProjectionOutcome {
  VectorX<Scalar> state;
  Scalar residual = Scalar(0);
  int iterations = 0;
};

/// Pull `x` back onto {f = target} along the range of Df(x)^T:
/// find lambda with f(x + Df(x)^T lambda) = target by simplified Newton with the
/// frozen Gram matrix Df Df^T.
template <typename Scalar>
ProjectionOutcome<Scalar> project_onto_constraint(const ProjectionConfig<Scalar>& cfg, const VectorX<Scalar>& x) {
  if (!(cfg.tol > Scalar(0))) throw std::invalid_argument("projection tolerance must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("projection max_iter must be positive");

  const FirstIntegralMap<Scalar>& f = cfg.constraint;
  ProjectionOutcome<Scalar> out;
  VectorX<Scalar> residual = f(x) - cfg.target;
  out.state = x;
  out.residual = residual.norm();
  if (out.residual <= cfg.tol) return out;

  const MatrixX<Scalar> jt = f.jacobian_transpose(x);
  const MatrixX<Scalar> gram = jt.transpose() * jt;
  const Eigen::LDLT<MatrixX<Scalar>> solver(gram);
  if (solver.info() != Eigen::Success || !(solver.rcond() > Scalar(1e-14))) {
    throw RankError("projection: constraint Gram matrix is singular");
  }

  VectorX<Scalar> lambda = VectorX<Scalar>::Zero(f.dim_values);
  while (out.iterations < cfg.max_iter) {
    lambda -= solver.solve(residual);
    ++out.iterations;
    out.state = x + jt * lambda;
    residual = f(out.state) - cfg.target;
    out.residual = residual.norm();
    if (!std::isfinite(static_cast<double>(out.residual))) break;
    if (out.residual <= cfg.tol) return out;
  }
  throw ProjectionError("projection: simplified Newton did not converge, residual " +
                            std::to_string(static_cast<double>(out.residual)),
                        static_cast<double>(out.residual));
}

/// Base step followed by projection onto the constraint level set.
template <typename BaseStep, typename Field, typename State, typename Scalar>
State projection_step(const BaseStep& base, const ProjectionConfig<Scalar>& cfg, const Field& field, const State& x,
                      Scalar h) {
  const State predicted = base(field, x, h);
  const VectorX<Scalar> projected = project_onto_constraint(cfg, VectorX<Scalar>(predicted)).state;
  return State(projected);
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Apply `step(x)` n times starting from x0; calls observer(k, x_k) for
/// k = 0..n. Errors from the scheme are rethrown with the failing step index.
template <typename Step, typename State, typename Observer>
State iterate(const Step& step, State x, long n, Observer&& observer) {
  observer(0L, static_cast<const State&>(x));
  for (long k = 1; k <= n; ++k) {
    try {
      x = step(x);
    } catch (const IntegrationError& e) {
      throw IntegrationError(e.message(), k);
    } catch (const DomainError& e) {
      throw IntegrationError(e.what(), k);
    }
    observer(k, static_cast<const State&>(x));
  }
  return x;
}

template <typename Step, typename State>
State iterate(const Step& step, State x, long n) {
  return iterate(step, std::move(x), n, [](long, const State&) {});
}

}  // namespace fbi
