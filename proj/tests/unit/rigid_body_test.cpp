#include <random>

#include <gtest/gtest.h>

#include "fbi/diagnostics.hpp"
#include "fbi/rigid_body.hpp"
#include "fbi/sampling.hpp"
#include "oracles.hpp"

using namespace fbi;

namespace {

const RigidBodyParams<double> kParams;

RigidBodyState<double> state(const Mat3d& R, const Vec3d& omega) { return {R, omega}; }

}  // namespace

TEST(RigidBody, DefaultTargets) {
  const auto s0 = rb_default_initial_state<double>();
  const auto p = RigidBodyParams<double>::from_initial(Vec3d(3, 2, 1), 50, 100, 50, s0);
  EXPECT_DOUBLE_EQ(p.E0, 3.0);
  EXPECT_EQ(p.pi0, Vec3d(3, 2, 1));
  EXPECT_EQ(rb_lyapunov_value(p, s0), 0.0);
}

TEST(RigidBody, LyapunovAtScaledIdentity) {
  // 12.5 * |0.21 I|^2 + 25 * |0.1 (3, 2, 1)|^2
  EXPECT_NEAR(rb_lyapunov_value(kParams, state(1.1 * Mat3d::Identity(), Vec3d(1, 1, 1))), 5.15375, 1e-13);
}

TEST(RigidBody, GainBound) {
  // min(50/4, 100 * 3/2, 50 * 14/2)
  EXPECT_DOUBLE_EQ(rb_gain_bound(kParams), 12.5);
}

TEST(RigidBody, FieldAtInitialState) {
  const auto f = rb_field(kParams, rb_default_initial_state<double>());
  EXPECT_EQ(f.R, hat(Vec3d(1, 1, 1)));
  // I^{-1} ((3, 2, 1) x (1, 1, 1)) = (1/3, -2/2, 1/1)
  EXPECT_LT((f.Omega - Vec3d(1.0 / 3, -1, 1)).norm(), 1e-15);
}

TEST(RigidBody, GradientVanishesOnLevelSet) {
  const auto g = rb_lyapunov_gradient(kParams, rb_default_initial_state<double>());
  EXPECT_EQ(g.R.norm() + g.Omega.norm(), 0.0);
}

TEST(RigidBody, PackRoundTrip) {
  std::mt19937_64 rng(3);
  const auto s = random_rigid_body_state<double>(rng);
  const auto t = unpack_rigid_body<double>(pack(s));
  EXPECT_EQ(s.R, t.R);
  EXPECT_EQ(s.Omega, t.Omega);
}

TEST(RigidBody, GradientMatchesFiniteDifferencesAndGeneric) {
  const RigidBodySystem<double> system(kParams);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto x = pack(random_rigid_body_state<double>(rng));
    const auto g = system.gradient(x);
    const auto fd = oracle::central_difference_gradient(
        [&system](const RigidBodyVector<double>& y) { return system.lyapunov(y); }, x);
    EXPECT_LT(oracle::relative_difference(g, fd), 1e-6);
    const VectorXd generic = generic_gradient(system.integral_map(), system.feedback_spec(), VectorXd(x));
    EXPECT_LT(oracle::relative_difference(VectorXd(g), generic), 1e-12);
  }
}

TEST(RigidBody, GradientOrthogonalToFieldForRandomGains) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> gain(0.1, 100);
  for (int i = 0; i < 200; ++i) {
    RigidBodyParams<double> p;
    p.k0 = gain(rng);
    p.k1 = gain(rng);
    p.k2 = gain(rng);
    p.inertia = random_vec3<double>(rng, 0.5, 4);
    const RigidBodySystem<double> system(p);
    EXPECT_LE(orthogonality_residual(system, pack(random_rigid_body_state<double>(rng))), 1e-12);
  }
}

TEST(RigidBody, ModifiedFieldIsFieldMinusGradient) {
  std::mt19937_64 rng(6);
  const RigidBodySystem<double> system(kParams);
  const auto x = pack(random_rigid_body_state<double>(rng));
  EXPECT_LT((system.modified_field(x) - (system.field(x) - system.gradient(x))).norm(), 1e-13);
}

TEST(RigidBody, SplittingPreservesRotationAndEnergy) {
  const RigidBodySystem<double> system(kParams);
  RigidBodyVector<double> x = pack(rb_default_initial_state<double>());
  for (int k = 0; k < 1000; ++k) x = system.splitting_step(x, 0.01);
  const auto m = system.metrics(x, pack(rb_default_initial_state<double>()));
  EXPECT_LT(m(2), 1e-13);  // orthogonality
  EXPECT_LT(m(1), 1e-13);  // spatial momentum: each rotation preserves it exactly
  EXPECT_LT(m(0), 1e-3);   // energy: bounded, second order
}

TEST(RigidBody, SplittingIsTimeReversible) {
  // Flipping Omega reverses time; a symmetric splitting retraces its step.
  const RigidBodySystem<double> system(kParams);
  const auto s0 = rb_default_initial_state<double>();
  const auto s1 = unpack_rigid_body<double>(system.splitting_step(pack(s0), 0.05));
  const auto back = unpack_rigid_body<double>(system.splitting_step(pack(state(s1.R, -s1.Omega)), 0.05));
  EXPECT_LT((back.R - s0.R).norm(), 1e-14);
  EXPECT_LT((back.Omega + s0.Omega).norm(), 1e-14);
}

TEST(RigidBody, ConstraintMapHasFullRankOnSO3) {
  const RigidBodySystem<double> system(kParams);
  std::mt19937_64 rng(7);
  std::vector<VectorXd> samples;
  for (int i = 0; i < 20; ++i) {
    samples.push_back(pack(RigidBodyState<double>{random_rotation<double>(rng), Vec3d(1, 1, 1)}));
  }
  const auto report = check_rank_condition(system.constraint_map(), samples);
  EXPECT_TRUE(report.pass);
  const VectorXd values = system.constraint_map()(samples.front());
  EXPECT_EQ(values.size(), 10);
  EXPECT_NEAR(values(6), 3.0, 1e-14);
}

TEST(RigidBody, FeedbackEulerStaysNearLevelSet) {
  const RigidBodySystem<double> system(kParams);
  const RigidBodyVector<double> x0 = pack(rb_default_initial_state<double>());
  auto field = [&system](const RigidBodyVector<double>& x) { return system.modified_field(x); };
  RigidBodyVector<double> x = x0;
  for (int k = 0; k < 20000; ++k) x = euler_step(field, x, 1e-4);
  EXPECT_LT(system.lyapunov(x), 1e-8);
}

TEST(RigidBody, ParamsValidation) {
  RigidBodyParams<double> p;
  p.inertia(1) = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = RigidBodyParams<double>{};
  p.k2 = -1;
  EXPECT_THROW(RigidBodySystem<double>{p}, std::invalid_argument);
  // Omega = 0 gives E0 = 0 and pi0 = 0.
  EXPECT_THROW(RigidBodyParams<double>::from_initial(Vec3d(3, 2, 1), 1, 1, 1, {Mat3d::Identity(), Vec3d::Zero()}),
               std::invalid_argument);
}

TEST(RigidBody, WorksInLongDouble) {
  const RigidBodyParams<long double> p;
  const RigidBodyState<long double> s{1.1L * Mat3<long double>::Identity(), Vec3<long double>(1, 1, 1)};
  EXPECT_NEAR(static_cast<double>(rb_lyapunov_value(p, s)), 5.15375, 1e-15);
}
