#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "fbi/diagnostics.hpp"
#include "fbi/kepler.hpp"
#include "fbi/perturbed_kepler.hpp"
#include "fbi/sampling.hpp"

using namespace fbi;

TEST(MeasureDrift, ReportsMetricsAndV) {
  const KeplerSystem<double> system(KeplerParams<double>{});
  Trajectory<OrbitalVector<double>> traj;
  const auto p = system.params();
  for (int i = 0; i < 5; ++i) {
    traj.t.push_back(i);
    traj.x.push_back(pack(orbit_state_at_time(p, double(i))));
  }
  traj.x.back()(4) += 1e-3;  // perturb v2 of the last sample
  const auto trace = measure_drift(system, traj);
  EXPECT_EQ(trace.names, (std::vector<std::string>{"dL", "dA", "dE", "V"}));
  ASSERT_EQ(trace.samples.size(), 5u);
  EXPECT_LT(trace.samples[3].metrics[0], 1e-12);
  EXPECT_GT(trace.max_of(0), 1e-4);
  EXPECT_GT(trace.samples[4].metrics[3], 0);
}

TEST(MeasureDrift, RejectsBadTrajectories) {
  const KeplerSystem<double> system(KeplerParams<double>{});
  Trajectory<OrbitalVector<double>> traj;
  EXPECT_THROW(measure_drift(system, traj), std::invalid_argument);
  traj.t = {0, 2, 1};
  traj.x.assign(3, pack(kepler_default_initial_state<double>()));
  EXPECT_THROW(measure_drift(system, traj), std::invalid_argument);
  traj.t = {0, 1, 2};
  traj.x[2].head<3>().setZero();
  EXPECT_THROW(measure_drift(system, traj), DomainError);
}

TEST(RankCondition, PermutationInvariant) {
  const PerturbedKeplerSystem<double> system(PerturbedKeplerParams<double>{});
  std::mt19937_64 rng(13);
  std::vector<VectorXd> samples;
  for (int i = 0; i < 30; ++i) samples.push_back(pack(random_orbital_state<double>(rng)));
  const auto a = check_rank_condition(system.integral_map(), samples);
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto b = check_rank_condition(system.integral_map(), samples);
  EXPECT_EQ(a.min_singular_value, b.min_singular_value);
  EXPECT_EQ(a.pass, b.pass);
}

TEST(RankCondition, NoSamplesIsAnError) {
  const PerturbedKeplerSystem<double> system(PerturbedKeplerParams<double>{});
  EXPECT_THROW(check_rank_condition(system.integral_map(), {}), std::invalid_argument);
}

TEST(StateAtLevel, HitsRequestedLevel) {
  const RigidBodySystem<double> system(RigidBodyParams<double>{});
  const RigidBodyVector<double> x0 = pack(rb_default_initial_state<double>());
  RigidBodyVector<double> dir = RigidBodyVector<double>::Ones();
  for (double level : {1e-6, 0.5, 3.0}) {
    EXPECT_NEAR(system.lyapunov(state_at_level(system, x0, dir, level)), level, 1e-9 * (1 + level));
  }
  EXPECT_EQ(state_at_level(system, x0, dir, 0.0), x0);
  EXPECT_THROW(state_at_level(system, x0, dir, -1.0), std::invalid_argument);
}

TEST(AttractorStudy, ValidatesInputs) {
  const RigidBodySystem<double> system(RigidBodyParams<double>{});
  const RigidBodyVector<double> x0 = pack(rb_default_initial_state<double>());
  EXPECT_THROW(attractor_step_study(system, x0, FeedbackScheme::Euler, {}, 1.0), std::invalid_argument);
  EXPECT_THROW(attractor_step_study(system, x0, FeedbackScheme::Euler, {1e-4, 2e-4}, 1.0), std::invalid_argument);
  const auto far = state_at_level(system, x0, RigidBodyVector<double>::Ones(), 20.0);
  EXPECT_THROW(attractor_step_study(system, far, FeedbackScheme::Euler, {1e-3}, 1.0), std::invalid_argument);
}

TEST(AttractorStudy, RK4PlateauShrinksFasterThanEuler) {
  const RigidBodySystem<double> system(RigidBodyParams<double>{});
  const RigidBodyVector<double> x0 = pack(rb_default_initial_state<double>());
  const auto x = state_at_level(system, x0, RigidBodyVector<double>::Ones(), 1e-2);
  const auto euler = attractor_step_study(system, x, FeedbackScheme::Euler, {1e-3, 5e-4}, 3.0);
  const auto rk4 = attractor_step_study(system, x, FeedbackScheme::RK4, {1e-3, 5e-4}, 3.0);
  EXPECT_FALSE(euler.basin_violation);
  EXPECT_TRUE(euler.nonincreasing);
  EXPECT_TRUE(rk4.nonincreasing);
  EXPECT_LT(rk4.plateau_values[1], euler.plateau_values[1]);
  EXPECT_LT(euler.onset_times[0], 3.0);
}

TEST(Perihelia, KeplerOrbitDoesNotPrecess) {
  const KeplerParams<double> p;
  const double period = orbit_geometry(p).period;
  std::vector<double> t;
  std::vector<Vec3d> x;
  for (int k = 0; k <= 40000; ++k) {
    t.push_back(k * 5 * period / 40000);
    x.push_back(orbit_state_at_time(p, t.back()).x);
  }
  const auto peri = find_perihelia(t, x, Vec3d(Vec3d::UnitZ()));
  ASSERT_GE(peri.size(), 4u);
  EXPECT_NEAR(peri[1].t - peri[0].t, period, 1e-3 * period);
  EXPECT_NEAR(precession_per_revolution(peri), 0.0, 1e-6);
}

TEST(Perihelia, RecoversImposedPrecession) {
  // Kepler orbit rotated by 0.1 rad per revolution about the normal.
  const KeplerParams<double> p;
  const double period = orbit_geometry(p).period;
  std::vector<double> t;
  std::vector<Vec3d> x;
  for (int k = 0; k <= 60000; ++k) {
    t.push_back(k * 6 * period / 60000);
    const double angle = 0.1 * t.back() / period;
    x.push_back(axis_rotation(2, angle) * orbit_state_at_time(p, t.back()).x);
  }
  EXPECT_NEAR(precession_per_revolution(find_perihelia(t, x, Vec3d(Vec3d::UnitZ()))), 0.1, 1e-3);
}

TEST(Perihelia, NeedsTwoPassages) {
  EXPECT_THROW(precession_per_revolution(std::vector<Perihelion<double>>(1)), std::invalid_argument);
}
