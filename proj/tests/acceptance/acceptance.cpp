// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 3 7        run a subset
//
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fbi/diagnostics.hpp"
#include "fbi/experiment.hpp"
#include "fbi/perturbed_kepler.hpp"
#include "fbi/sampling.hpp"
#include "oracles.hpp"

using namespace fbi;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    out_ << v;
    first_ = true;
    return *this;
  }
  Detail& num(const char* name, double v) {
    if (!first_) out_ << ", ";
    first_ = false;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.3g", name, v);
    out_ << buf;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_of(const RunSummary& s, const std::string& name) {
  for (std::size_t i = 0; i < s.metric_names.size(); ++i) {
    if (s.metric_names[i] == name) return s.max_drift[i];
  }
  throw std::logic_error("no metric " + name);
}

ExperimentConfig protocol(SystemKind system, Method method, double t_end) {
  ExperimentConfig cfg = default_config(system);
  cfg.method = method;
  cfg.t_end = t_end;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome rigid_body_protocol() {
  const auto start = std::chrono::steady_clock::now();
  const auto fb = run_experiment(protocol(SystemKind::RigidBody, Method::FeedbackEuler, 50), nullptr);
  const auto eu = run_experiment(protocol(SystemKind::RigidBody, Method::Euler, 50), nullptr);
  const double elapsed = seconds_since(start);
  const double de = max_of(fb, "dE"), dpi = max_of(fb, "dpi"), orth = max_of(fb, "orth");
  const double de_euler = max_of(eu, "dE");
  Detail d;
  d.num("feedback dE", de).num("dpi", dpi).num("orth", orth).num("euler dE", de_euler).num("seconds", elapsed);
  const bool pass = fb.ok && eu.ok && de <= 1e-6 && dpi <= 1e-6 && orth <= 1e-6 && de_euler >= 1e-3 && elapsed <= 60;
  return {pass, d.str()};
}

Outcome kepler_protocol() {
  const auto start = std::chrono::steady_clock::now();
  const double t_end = 702.5;
  const auto fb = run_experiment(protocol(SystemKind::Kepler, Method::FeedbackEuler, t_end), nullptr);
  const auto sv = run_experiment(protocol(SystemKind::Kepler, Method::StormerVerletA, t_end), nullptr);
  const double elapsed = seconds_since(start);
  const double dl = max_of(fb, "dL"), da = max_of(fb, "dA");
  const double dl_sv = max_of(sv, "dL"), da_sv = max_of(sv, "dA");
  Detail d;
  d.num("feedback dL", dl).num("dA", da).num("SV-A dL", dl_sv).num("SV-A dA", da_sv).num("seconds", elapsed);
  const bool pass =
      fb.ok && sv.ok && dl <= 1e-4 && da <= 1e-4 && dl_sv <= 1e-10 && da_sv >= 10 * da && elapsed <= 60;
  return {pass, d.str()};
}

struct OrbitRecord {
  RunSummary summary;
  std::vector<double> t;
  std::vector<Vec3d> x;
};

OrbitRecord record_orbit(const ExperimentConfig& cfg) {
  OrbitRecord rec;
  rec.t.reserve(static_cast<std::size_t>(cfg.step_count() + 1));
  rec.x.reserve(rec.t.capacity());
  rec.summary = run_experiment(cfg, nullptr, [&rec](long, double t, const Eigen::Ref<const VectorXd>& s) {
    rec.t.push_back(t);
    rec.x.emplace_back(s.head<3>());
  });
  return rec;
}

Outcome perturbed_kepler_protocol() {
  const auto start = std::chrono::steady_clock::now();
  auto ref_cfg = protocol(SystemKind::PerturbedKepler, Method::RK4, 200);
  ref_cfg.h = 1e-4;
  const auto ref = record_orbit(ref_cfg);
  const auto fb = record_orbit(protocol(SystemKind::PerturbedKepler, Method::FeedbackEuler, 200));
  const auto sv = record_orbit(protocol(SystemKind::PerturbedKepler, Method::StormerVerletA, 200));
  const auto pr = record_orbit(protocol(SystemKind::PerturbedKepler, Method::ProjectionEuler, 200));
  const double elapsed = seconds_since(start);

  const Vec3d normal = Vec3d::UnitZ();
  auto precession = [&normal](const OrbitRecord& r) {
    return precession_per_revolution(find_perihelia(r.t, r.x, normal));
  };
  const double p_ref = precession(ref), p_fb = precession(fb), p_pr = precession(pr);
  const double de = max_of(fb.summary, "dE"), dl = max_of(fb.summary, "dL");
  const double de_sv = max_of(sv.summary, "dE");

  const bool energy = de <= 5 * de_sv;
  const bool momentum = dl <= 1e-3;
  const bool agree = std::abs(p_fb - p_ref) <= 0.1 * std::abs(p_ref);
  const bool projection_worse = std::abs(p_pr) > std::abs(p_ref) && std::abs(p_pr - p_ref) > std::abs(p_fb - p_ref);
  Detail d;
  d.num("feedback dE", de).num("SV dE", de_sv).num("feedback dL", dl);
  d.num("precession ref", p_ref).num("feedback", p_fb).num("projection", p_pr).num("seconds", elapsed);
  d << " [energy " << (energy ? "ok" : "fails") << ", momentum " << (momentum ? "ok" : "fails") << ", precession "
    << (agree ? "ok" : "fails") << ", projection " << (projection_worse ? "ok" : "fails") << "]";
  const bool ok = ref.summary.ok && fb.summary.ok && sv.summary.ok && pr.summary.ok;
  return {ok && energy && momentum && agree && projection_worse && elapsed <= 120, d.str()};
}

// ---------------------------------------------------------------------------

template <typename System, typename Sampler>
void gradient_suite(const System& system, Sampler sample, double& generic_worst, double& fd_worst) {
  const auto f = system.integral_map();
  const auto spec = system.feedback_spec();
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample();
    const auto g = system.gradient(x);
    const VectorXd generic = generic_gradient(f, spec, VectorXd(x));
    const auto fd = oracle::central_difference_gradient(
        [&system](const typename System::State& y) { return system.lyapunov(y); }, x, 1e-6);
    generic_worst = std::max(generic_worst, oracle::relative_difference(VectorXd(g), generic));
    fd_worst = std::max(fd_worst, oracle::relative_difference(g, fd));
  }
}

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  Detail d;
  bool pass = true;
  auto report = [&](const char* name, double generic, double fd) {
    pass = pass && generic <= 1e-12 && fd <= 1e-5;
    d << name << ": ";
    d.num("generic", generic).num("fd", fd);
    d << "; ";
  };
  double g = 0, f = 0;
  gradient_suite(RigidBodySystem<double>(RigidBodyParams<double>{}),
                 [&rng] { return pack(random_rigid_body_state<double>(rng)); }, g, f);
  report("rigid body", g, f);
  g = f = 0;
  gradient_suite(KeplerSystem<double>(KeplerParams<double>{}), [&rng] { return pack(random_orbital_state<double>(rng)); },
                 g, f);
  report("kepler", g, f);
  g = f = 0;
  gradient_suite(PerturbedKeplerSystem<double>(PerturbedKeplerParams<double>{}),
                 [&rng] { return pack(random_orbital_state<double>(rng)); }, g, f);
  report("perturbed kepler", g, f);
  const double elapsed = seconds_since(start);
  d.num("seconds", elapsed);
  return {pass && elapsed <= 10, d.str()};
}

Outcome orthogonality_suites() {
  std::mt19937_64 rng(5);
  double rb = 0, k = 0, pk = 0;
  const RigidBodySystem<double> rigid(RigidBodyParams<double>{});
  const KeplerSystem<double> kepler(KeplerParams<double>{});
  const PerturbedKeplerSystem<double> perturbed(PerturbedKeplerParams<double>{});
  for (int i = 0; i < 10000; ++i) {
    rb = std::max(rb, orthogonality_residual(rigid, pack(random_rigid_body_state<double>(rng))));
    k = std::max(k, orthogonality_residual(kepler, pack(random_orbital_state<double>(rng))));
    pk = std::max(pk, orthogonality_residual(perturbed, pack(random_orbital_state<double>(rng))));
  }
  Detail d;
  d.num("rigid body", rb).num("kepler", k).num("perturbed kepler", pk);
  return {rb <= 1e-12 && k <= 1e-12 && pk <= 1e-12, d.str()};
}

Outcome invariant_set() {
  auto cfg = protocol(SystemKind::RigidBody, Method::FeedbackEuler, 20);
  const auto s = run_experiment(cfg, nullptr);
  Detail d;
  d.num("max V", max_of(s, "V")).num("steps", static_cast<double>(s.steps_taken));
  return {s.ok && max_of(s, "V") <= 1e-10, d.str()};
}

Outcome attractor_shrinkage() {
  const RigidBodySystem<double> system(RigidBodyParams<double>{});
  const RigidBodyVector<double> x_ref = pack(rb_default_initial_state<double>());
  RigidBodyVector<double> dir;
  dir << 0.3, -0.2, 0.1, 0.25, 0.1, -0.3, -0.1, 0.2, 0.15, 0.4, -0.3, 0.2;
  const auto x_init = state_at_level(system, x_ref, dir, 1.0);
  const auto r = attractor_step_study(system, x_init, FeedbackScheme::Euler, {4e-4, 2e-4, 1e-4}, 20.0);
  Detail d;
  d.num("plateau(4e-4)", r.plateau_values[0]).num("plateau(2e-4)", r.plateau_values[1]);
  d.num("plateau(1e-4)", r.plateau_values[2]);
  return {!r.basin_violation && r.nonincreasing && r.shrinks, d.str()};
}

Outcome hypothesis_checker() {
  const PerturbedKeplerParams<double> p;
  const auto report = pk_check_hypothesis(p);
  // mu r^2 - |L0|^2 r + 3 delta = 0
  const double l2 = p.L0.squaredNorm(), mu = 1, delta = 0.0025;
  const double disc = std::sqrt(l2 * l2 - 12 * mu * delta);
  const double oracle_hi = (l2 + disc) / (2 * mu), oracle_lo = (l2 - disc) / (2 * mu);

  bool located = report.roots.size() == 2;
  Detail d;
  d << (report.satisfied ? "SATISFIED" : "VIOLATED") << " with " << report.roots.size() << " roots";
  if (located) {
    const double lo = std::min(report.roots[0].r, report.roots[1].r);
    const double hi = std::max(report.roots[0].r, report.roots[1].r);
    located = std::abs(hi - 0.62806) <= 1e-5 && std::abs(lo - 0.011938) <= 1e-5 && std::abs(hi - oracle_hi) <= 1e-10 &&
              std::abs(lo - oracle_lo) <= 1e-10;
    d << " (" << hi << ", " << lo << ")";
  }

  // delta = 0 circular orbit: x = (1, 0, 0), v = (0, 1, 0).
  const auto circular = PerturbedKeplerParams<double>::from_initial(
      inverse_cube_perturbed_potential(1.0, 0.0), 2.0, 3.0, {Vec3d(1, 0, 0), Vec3d(0, 1, 0)});
  const auto counter = pk_check_hypothesis(circular);
  d << "; circular case " << (counter.satisfied ? "SATISFIED" : "VIOLATED");
  return {report.satisfied && located && !counter.satisfied, d.str()};
}

Outcome scheme_orders() {
  const RigidBodySystem<double> rigid(RigidBodyParams<double>{});
  const KeplerSystem<double> kepler(KeplerParams<double>{});
  const auto rb0 = pack(rb_default_initial_state<double>());
  const auto k0 = pack(kepler_default_initial_state<double>());
  auto rb_field = [&rigid](const RigidBodyVector<double>& x) { return rigid.field(x); };
  auto k_field = [&kepler](const OrbitalVector<double>& x) { return kepler.field(x); };
  auto accel = [&kepler](const auto& q) { return kepler.acceleration(q); };

  const double t_rb = 1.0, t_k = 2.0;
  const RigidBodyVector<double> rb_exact = oracle::rk4_reference(rb_field, rb0, t_rb, 20000);
  const OrbitalVector<double> k_exact = pack(orbit_state_at_time(kepler.params(), t_k));

  const double euler = oracle::halving_ratio(
      [&](const RigidBodyVector<double>& x, double h) { return euler_step(rb_field, x, h); }, rb0, rb_exact, t_rb, 200);
  const double split = oracle::halving_ratio(
      [&](const RigidBodyVector<double>& x, double h) { return rigid.splitting_step(x, h); }, rb0, rb_exact, t_rb, 100);
  const double sva = oracle::halving_ratio(
      [&](const OrbitalVector<double>& x, double h) { return stormer_verlet_state_step(accel, x, h, VerletVariant::A); },
      k0, k_exact, t_k, 200);
  const double svb = oracle::halving_ratio(
      [&](const OrbitalVector<double>& x, double h) { return stormer_verlet_state_step(accel, x, h, VerletVariant::B); },
      k0, k_exact, t_k, 200);
  const double rk4 = oracle::halving_ratio(
      [&](const OrbitalVector<double>& x, double h) { return rk4_step(k_field, x, h); }, k0, k_exact, t_k, 50);

  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  Detail d;
  d.num("euler", euler).num("splitting", split).num("SV-A", sva).num("SV-B", svb).num("rk4", rk4);
  const bool pass = in(euler, 1.8, 2.2) && in(split, 3.6, 4.4) && in(sva, 3.6, 4.4) && in(svb, 3.6, 4.4) &&
                    in(rk4, 14, 18);
  return {pass, d.str()};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "rigid body feedback Euler, t <= 50", rigid_body_protocol},
      {2, "Kepler feedback Euler vs Stormer-Verlet-A, 10 periods", kepler_protocol},
      {3, "perturbed Kepler energy, momentum and precession, t <= 200", perturbed_kepler_protocol},
      {4, "closed-form gradients vs generic and finite differences", gradient_correctness},
      {5, "orthogonality of grad V and X", orthogonality_suites},
      {6, "V stays zero from V^{-1}(0), rigid body", invariant_set},
      {7, "attractor shrinks with the step size", attractor_shrinkage},
      {8, "perturbed Kepler hypothesis checker", hypothesis_checker},
      {9, "scheme orders under step halving", scheme_orders},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
