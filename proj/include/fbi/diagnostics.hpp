#pragma once

// Conservation-drift metrics, hypothesis validators, and the step-size study of
// the discrete attractor of a feedback scheme.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "fbi/feedback.hpp"
#include "fbi/integrators.hpp"
#include "fbi/numerics.hpp"

namespace fbi {

// ---------------------------------------------------------------------------
// Drift traces
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DriftSample {
  Scalar t;
  std::vector<Scalar> metrics;  // aligned with DriftTrace::names
};

template <typename Scalar>
struct DriftTrace {
  std::vector<std::string> names;  // system metrics followed by "V"
  std::vector<DriftSample<Scalar>> samples;

  Scalar max_of(std::size_t metric) const {
    Scalar m = 0;
    for (const auto& s : samples) m = std::max(m, s.metrics[metric]);
    return m;
  }
};

template <typename State, typename Scalar = typename State::Scalar>
struct Trajectory {
  std::vector<Scalar> t;
  std::vector<State> x;
};

/// Drift of every system metric against the first sample, plus V.
template <typename System>
DriftTrace<typename System::State::Scalar> measure_drift(const System& system,
                                                         const Trajectory<typename System::State>& trajectory) {
  using Scalar = typename System::State::Scalar;
  if (trajectory.x.empty() || trajectory.x.size() != trajectory.t.size()) {
    throw std::invalid_argument("measure_drift: trajectory must be nonempty with one time per state");
  }
  DriftTrace<Scalar> trace;
  trace.names = System::metric_names();
  trace.names.emplace_back("V");
  trace.samples.reserve(trajectory.x.size());
  const auto& x0 = trajectory.x.front();
  for (std::size_t k = 0; k < trajectory.x.size(); ++k) {
    if (k > 0 && trajectory.t[k] < trajectory.t[k - 1]) {
      throw std::invalid_argument("measure_drift: times must be nondecreasing");
    }
    DriftSample<Scalar> sample{trajectory.t[k], {}};
    try {
      const auto m = system.metrics(trajectory.x[k], x0);
      sample.metrics.assign(m.data(), m.data() + m.size());
      sample.metrics.push_back(system.lyapunov(trajectory.x[k]));
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " at sample " + std::to_string(k));
    }
    trace.samples.push_back(std::move(sample));
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Rank condition: Df(x) onto at sampled states
// ---------------------------------------------------------------------------

template <typename Scalar>
struct RankReport {
  std::vector<Scalar> smallest_singular_values;  // one per sample
  Scalar min_singular_value = 0;
  Scalar threshold = Scalar(1e-8);
  bool pass = false;
};

/// Smallest singular value of Df at each sample; PASS when all exceed 1e-8.
template <typename Scalar>
RankReport<Scalar> check_rank_condition(const FirstIntegralMap<Scalar>& f, const std::vector<VectorX<Scalar>>& samples,
                                        Scalar threshold = Scalar(1e-8)) {
  if (samples.empty()) throw std::invalid_argument("check_rank_condition: no samples");
  RankReport<Scalar> report;
  report.threshold = threshold;
  report.min_singular_value = std::numeric_limits<Scalar>::infinity();
  for (const auto& x : samples) {
    const MatrixX<Scalar> df = f.jacobian_transpose(x).transpose();
    const Eigen::JacobiSVD<MatrixX<Scalar>> svd(df);
    const auto& sv = svd.singularValues();
    // Df is dim_values x dim_state; onto needs dim_values nonzero singular values.
    const Scalar smallest = df.rows() <= df.cols() ? sv(df.rows() - 1) : Scalar(0);
    report.smallest_singular_values.push_back(smallest);
    report.min_singular_value = std::min(report.min_singular_value, smallest);
  }
  report.pass = report.min_singular_value > threshold;
  return report;
}

// ---------------------------------------------------------------------------
// Orthogonality of grad V and X
// ---------------------------------------------------------------------------

/// |<grad V, X>| / (1 + |grad V| |X|).
template <typename System>
typename System::State::Scalar orthogonality_residual(const System& system, const typename System::State& x) {
  const auto g = system.gradient(x);
  const auto f = system.field(x);
  using std::abs;
  return abs(g.dot(f)) / (1 + g.norm() * f.norm());
}

// ---------------------------------------------------------------------------
// Attractor step-size study
// ---------------------------------------------------------------------------

enum class FeedbackScheme { Euler, RK4 };

/// Point x_ref + s d with V = level, found by bracketing and bisection in s.
template <typename System>
typename System::State state_at_level(const System& system, const typename System::State& x_ref,
                                      const typename System::State& direction, typename System::State::Scalar level) {
  using Scalar = typename System::State::Scalar;
  if (!(level >= 0)) throw std::invalid_argument("state_at_level: level must be nonnegative");
  if (level == 0) return x_ref;
  const typename System::State d = direction.normalized();
  Scalar lo = 0, hi = Scalar(1e-3);
  while (system.lyapunov(typename System::State(x_ref + hi * d)) < level) {
    lo = hi;
    hi *= 2;
    if (hi > Scalar(1e6)) throw std::runtime_error("state_at_level: level not reached along direction");
  }
  for (int i = 0; i < 200 && hi - lo > std::numeric_limits<Scalar>::epsilon() * hi; ++i) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (system.lyapunov(typename System::State(x_ref + mid * d)) < level) lo = mid;
    else hi = mid;
  }
  return x_ref + hi * d;
}

template <typename Scalar>
struct AttractorStudyResult {
  std::vector<Scalar> step_sizes;
  std::vector<Scalar> plateau_values;  // median V over the final 10% of the horizon
  std::vector<Scalar> onset_times;     // first time V <= 2 * plateau
  std::vector<Scalar> peak_values;     // max V along each run
  bool basin_violation = false;        // some run left V^{-1}([0, c])
  bool nonincreasing = false;          // plateau(h_{i+1}) <= plateau(h_i)
  bool shrinks = false;                // plateau(smallest h) <= plateau(largest h) / 4
};

namespace detail {

template <typename System>
void attractor_cell(const System& system, const typename System::State& x_init, FeedbackScheme scheme,
                    typename System::State::Scalar h, typename System::State::Scalar horizon,
                    typename System::State::Scalar& plateau, typename System::State::Scalar& onset,
                    typename System::State::Scalar& peak) {
  using Scalar = typename System::State::Scalar;
  using State = typename System::State;
  const long n = static_cast<long>(std::floor(horizon / h * (1 + 1e-12)));
  const long tail_start = n - n / 10;
  auto field = [&system](const State& x) { return system.modified_field(x); };
  std::vector<Scalar> values(static_cast<std::size_t>(n + 1));
  State x = x_init;
  values[0] = system.lyapunov(x);
  for (long k = 1; k <= n; ++k) {
    x = scheme == FeedbackScheme::Euler ? euler_step(field, x, h) : rk4_step(field, x, h);
    values[static_cast<std::size_t>(k)] = system.lyapunov(x);
  }
  peak = *std::max_element(values.begin(), values.end());
  std::vector<Scalar> tail(values.begin() + tail_start, values.end());
  auto mid = tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2);
  std::nth_element(tail.begin(), mid, tail.end());
  plateau = *mid;
  onset = horizon;
  for (long k = 0; k <= n; ++k) {
    if (values[static_cast<std::size_t>(k)] <= 2 * plateau) {
      onset = Scalar(k) * h;
      break;
    }
  }
}

}  // namespace detail

/// Integrates the feedback field from x_init (V(x_init) = v_init) once per
/// step size and records the asymptotic V level. Cells run concurrently.
template <typename System>
AttractorStudyResult<typename System::State::Scalar> attractor_step_study(
    const System& system, const typename System::State& x_init, FeedbackScheme scheme,
    const std::vector<typename System::State::Scalar>& step_sizes, typename System::State::Scalar horizon) {
  using Scalar = typename System::State::Scalar;
  if (step_sizes.empty()) throw std::invalid_argument("attractor_step_study: no step sizes");
  for (std::size_t i = 1; i < step_sizes.size(); ++i) {
    if (!(step_sizes[i] < step_sizes[i - 1])) {
      throw std::invalid_argument("attractor_step_study: step sizes must be decreasing");
    }
  }
  const Scalar c = system.gain_bound();
  if (!(system.lyapunov(x_init) < c)) {
    throw std::invalid_argument("attractor_step_study: initial V must be below the gain bound");
  }

  const std::size_t m = step_sizes.size();
  AttractorStudyResult<Scalar> result;
  result.step_sizes = step_sizes;
  result.plateau_values.assign(m, 0);
  result.onset_times.assign(m, 0);
  result.peak_values.assign(m, 0);
  std::vector<std::future<void>> cells;
  for (std::size_t i = 0; i < m; ++i) {
    cells.push_back(std::async(std::launch::async, [&, i] {
      detail::attractor_cell(system, x_init, scheme, step_sizes[i], horizon, result.plateau_values[i],
                             result.onset_times[i], result.peak_values[i]);
    }));
  }
  for (auto& cell : cells) cell.get();

  result.nonincreasing = true;
  for (std::size_t i = 0; i < m; ++i) {
    if (result.peak_values[i] > c) result.basin_violation = true;
    if (i > 0 && result.plateau_values[i] > result.plateau_values[i - 1]) result.nonincreasing = false;
  }
  result.shrinks = result.plateau_values.back() <= result.plateau_values.front() / 4;
  return result;
}

// ---------------------------------------------------------------------------
// Orbit geometry along sampled trajectories
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Perihelion {
  Scalar t;
  Scalar angle;  // unwrapped polar angle in the orbital plane
  Vec3<Scalar> position;
};

/// Local minima of |x| along a sampled orbit, refined by a parabola through
/// the three samples around each discrete minimum. Angles are measured in the
/// plane with normal `normal` and unwrapped across passages.
template <typename Scalar>
std::vector<Perihelion<Scalar>> find_perihelia(const std::vector<Scalar>& t, const std::vector<Vec3<Scalar>>& x,
                                               const Vec3<Scalar>& normal = Vec3<Scalar>::UnitZ()) {
  using std::atan2;
  const Vec3<Scalar> n = normal.normalized();
  const Vec3<Scalar> seed = std::abs(n.x()) < Scalar(0.9) ? Vec3<Scalar>::UnitX() : Vec3<Scalar>::UnitY();
  const Vec3<Scalar> e1 = (seed - seed.dot(n) * n).normalized();
  const Vec3<Scalar> e2 = n.cross(e1);

  std::vector<Perihelion<Scalar>> out;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const Scalar r0 = x[k - 1].norm(), r1 = x[k].norm(), r2 = x[k + 1].norm();
    if (!(r1 < r0 && r1 <= r2)) continue;
    // Vertex of the parabola through (-1, r0), (0, r1), (1, r2), in units of samples.
    const Scalar curvature = r0 - 2 * r1 + r2;
    const Scalar s = curvature > 0 ? Scalar(0.5) * (r0 - r2) / curvature : Scalar(0);
    const Scalar w_prev = Scalar(0.5) * s * (s - 1);
    const Scalar w_mid = 1 - s * s;
    const Scalar w_next = Scalar(0.5) * s * (s + 1);
    Perihelion<Scalar> p;
    p.t = w_prev * t[k - 1] + w_mid * t[k] + w_next * t[k + 1];
    p.position = w_prev * x[k - 1] + w_mid * x[k] + w_next * x[k + 1];
    p.angle = atan2(p.position.dot(e2), p.position.dot(e1));
    out.push_back(p);
  }
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  for (std::size_t i = 1; i < out.size(); ++i) {
    Scalar delta = out[i].angle - out[i - 1].angle;
    delta -= two_pi * std::round(delta / two_pi);
    out[i].angle = out[i - 1].angle + delta;
  }
  return out;
}

/// Least-squares slope of perihelion angle against passage index.
template <typename Scalar>
Scalar precession_per_revolution(const std::vector<Perihelion<Scalar>>& perihelia) {
  const std::size_t n = perihelia.size();
  if (n < 2) throw std::invalid_argument("precession_per_revolution: need at least two perihelion passages");
  Scalar mean_i = 0, mean_a = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_i += Scalar(i);
    mean_a += perihelia[i].angle;
  }
  mean_i /= Scalar(n);
  mean_a /= Scalar(n);
  Scalar num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (Scalar(i) - mean_i) * (perihelia[i].angle - mean_a);
    den += (Scalar(i) - mean_i) * (Scalar(i) - mean_i);
  }
  return num / den;
}

}  // namespace fbi
