#include <random>

#include <gtest/gtest.h>

#include "fbi/numerics.hpp"
#include "fbi/sampling.hpp"

using namespace fbi;

TEST(Hat, MatchesCrossProduct) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3d u = random_vec3<double>(rng, -3, 3), v = random_vec3<double>(rng, -3, 3);
    EXPECT_LT((hat(u) * v - u.cross(v)).norm(), 1e-14);
    EXPECT_LT((hat(u) + hat(u).transpose()).norm(), 1e-15);
  }
}

TEST(Hat, UnitVectors) {
  Mat3d expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_EQ(hat(Vec3d(Vec3d::UnitX())), expected);
}

TEST(Frobenius, ScaledIdentity) {
  // sqrt(3) * 0.21
  EXPECT_NEAR(frobenius_norm(Mat3d(0.21 * Mat3d::Identity())), 0.363730669589464, 1e-15);
  EXPECT_EQ(frobenius_norm(Mat3d::Zero()), 0.0);
}

TEST(AllFinite, DetectsNanAndInf) {
  Vec3d v(1, 2, 3);
  EXPECT_TRUE(all_finite(v));
  v(1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(all_finite(v));
  v(1) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(v));
}

TEST(Diag3, PlacesEntries) {
  const Mat3d d = diag3(Vec3d(3, 2, 1));
  EXPECT_EQ(d(0, 0), 3);
  EXPECT_EQ(d(1, 1), 2);
  EXPECT_EQ(d(2, 2), 1);
  EXPECT_EQ(d(0, 1), 0);
}

TEST(AxisRotation, IsRightHandedRotation) {
  for (int axis = 0; axis < 3; ++axis) {
    const Mat3d r = axis_rotation(axis, 0.7);
    EXPECT_LT((r.transpose() * r - Mat3d::Identity()).norm(), 1e-15);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-15);
    // Rotating e_{axis+1} by +pi/2 gives e_{axis+2}.
    const Mat3d q = axis_rotation(axis, std::numbers::pi / 2);
    const Vec3d e1 = Vec3d::Unit((axis + 1) % 3), e2 = Vec3d::Unit((axis + 2) % 3);
    EXPECT_LT((q * e1 - e2).norm(), 1e-15);
    EXPECT_LT((q * Vec3d::Unit(axis) - Vec3d::Unit(axis)).norm(), 1e-15);
  }
}

TEST(AxisRotation, EqualsExponentialOfHat) {
  const Mat3d r = axis_rotation(1, 0.3);
  const Mat3d ref = Eigen::AngleAxisd(0.3, Vec3d::UnitY()).toRotationMatrix();
  EXPECT_LT((r - ref).norm(), 1e-15);
}

TEST(Errors, IntegrationErrorCarriesStep) {
  const IntegrationError e("bad", 12);
  EXPECT_EQ(e.step(), 12);
  EXPECT_EQ(e.message(), "bad");
  EXPECT_NE(std::string(e.what()).find("step 12"), std::string::npos);
  const IntegrationError loose("loose", -1);
  EXPECT_STREQ(loose.what(), "loose");
}

TEST(Errors, ProjectionErrorCarriesResidual) {
  const ProjectionError e("no convergence", 0.5);
  EXPECT_EQ(e.residual(), 0.5);
}
