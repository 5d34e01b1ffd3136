#include "mrtele/kinematics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mrtele::kinematics;

namespace {

// Elementary-motion oracle: Rx(alpha) Tx(a) Rz(theta) Tz(d).
Transform oracle_dh(double alpha, double a, double d, double theta) {
  Eigen::Affine3d t = Eigen::Affine3d::Identity();
  t.rotate(Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()));
  t.translate(Eigen::Vector3d(a, 0, 0));
  t.rotate(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()));
  t.translate(Eigen::Vector3d(0, 0, d));
  return t.matrix();
}

JointVector random_within(const KinematicChain& chain, std::mt19937_64& rng) {
  JointVector q(chain.dof());
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    std::uniform_real_distribution<double> u(chain.limits[i].min, chain.limits[i].max);
    q[static_cast<Eigen::Index>(i)] = u(rng);
  }
  return q;
}

KinematicChain planar_2r(double l1, double l2) {
  KinematicChain c;
  c.name = "planar";
  c.rows = {{0, 0, 0, 0}, {0, l1, 0, 0}, {0, l2, 0, 0}};
  c.limits.assign(3, JointLimit{});
  return c;
}

}  // namespace

TEST(DhTransform, MatchesElementaryMotionProduct) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-3.0, 3.0), len(0.0, 0.5);
  for (int i = 0; i < 200; ++i) {
    const DHRow row{ang(rng), len(rng), len(rng) - 0.25, ang(rng)};
    const double theta = ang(rng);
    const Transform got = dh_transform(row, theta);
    const Transform want = oracle_dh(row.alpha, row.a, row.d, theta + row.theta_offset);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForwardKinematics, EqualsChainedTransforms) {
  const auto chain = default_slave_chain();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const JointVector q = random_within(chain, rng);
    Transform t = Transform::Identity();
    for (std::size_t j = 0; j < chain.dof(); ++j) {
      const auto& r = chain.rows[j];
      t = t * oracle_dh(r.alpha, r.a, r.d, q[static_cast<Eigen::Index>(j)] + r.theta_offset);
    }
    const Pose p = forward_kinematics(chain, q);
    EXPECT_LT((p.position - t.block<3, 1>(0, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p.orientation - t.block<3, 3>(0, 0)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForwardKinematics, ZeroPoseOfSlaveStacksLinkOffsets) {
  const Pose p = forward_kinematics(default_slave_chain(), JointVector::Zero(7));
  EXPECT_NEAR(p.position.x(), 0.0, 1e-12);
  EXPECT_NEAR(p.position.y(), 0.0, 1e-12);
  EXPECT_NEAR(p.position.z(), 0.34 + 0.40 + 0.40 + 0.126, 1e-12);
}

TEST(ForwardKinematics, RotationsStayOrthonormal) {
  std::mt19937_64 rng(7);
  for (const auto& chain : {exoskeleton_chain(), default_slave_chain()}) {
    for (int i = 0; i < 2000; ++i) {
      const Mat3 r = forward_kinematics(chain, random_within(chain, rng)).orientation;
      EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    }
  }
}

TEST(ForwardKinematics, ExoskeletonPositionIgnoresWristJoint) {
  const auto chain = exoskeleton_chain();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> wrist(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    JointVector q = random_within(chain, rng);
    const Pose a = forward_kinematics(chain, q);
    q[4] = wrist(rng);
    const Pose b = forward_kinematics(chain, q);
    EXPECT_EQ(a.position, b.position);
    // Orientation differs only by a rotation about the last z axis.
    const Mat3 rel = a.orientation.transpose() * b.orientation;
    EXPECT_NEAR(rel(2, 2), 1.0, 1e-12);
  }
}

TEST(ForwardKinematics, RejectsWrongJointCount) {
  EXPECT_THROW(forward_kinematics(exoskeleton_chain(), JointVector::Zero(3)), std::invalid_argument);
}

TEST(Jacobian, AgreesWithAnalyticTwoLinkPlanarArm) {
  const double l1 = 0.4, l2 = 0.3;
  const auto chain = planar_2r(l1, l2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double q1 = u(rng), q2 = u(rng);
    JointVector q(3);
    q << q1, q2, u(rng);
    const Jacobian j = numeric_jacobian(chain, q);
    Eigen::Matrix<double, 6, 3> want = Eigen::Matrix<double, 6, 3>::Zero();
    want(0, 0) = -l1 * std::sin(q1) - l2 * std::sin(q1 + q2);
    want(1, 0) = l1 * std::cos(q1) + l2 * std::cos(q1 + q2);
    want(0, 1) = -l2 * std::sin(q1 + q2);
    want(1, 1) = l2 * std::cos(q1 + q2);
    want(5, 0) = want(5, 1) = want(5, 2) = 1.0;
    EXPECT_LT((j - want).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(InverseKinematics, RoundTripsReachableTargets) {
  const auto chain = default_slave_chain();
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nudge(0.0, 0.2);
  IkParams params;
  params.max_iters = 1000;
  int converged = 0;
  for (int i = 0; i < 100; ++i) {
    const JointVector truth = random_within(chain, rng);
    const Pose target = forward_kinematics(chain, truth);
    JointVector seed = truth;
    for (Eigen::Index k = 0; k < seed.size(); ++k) seed[k] += nudge(rng);
    const IkResult r = inverse_kinematics_dls(chain, target, chain.clamp(seed), params);
    const double err = (forward_kinematics(chain, r.q).position - target.position).norm();
    EXPECT_LE(err, params.tol) << "target " << i;
    EXPECT_TRUE(chain.within_limits(r.q, 1e-12));
    converged += r.converged;
  }
  EXPECT_EQ(converged, 100);
}

TEST(InverseKinematics, UnreachableTargetReportsBestIterate) {
  const auto chain = default_slave_chain();
  Pose far;
  far.position = Vec3(5.0, 0.0, 0.0);
  const IkResult r = inverse_kinematics_dls(chain, far, JointVector::Zero(7));
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.position_error, 3.0);
  EXPECT_TRUE(r.q.allFinite());
}

TEST(WorkspaceMap, IdentityAndScaledExamples) {
  Pose m;
  m.position = Vec3(0.2, 0.0, 0.1);
  m.orientation = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  EXPECT_EQ(map_workspace(m, WorkspaceMap{}).position, m.position);

  WorkspaceMap s;
  s.scale = Vec3::Constant(1.5);
  const Pose out = map_workspace(m, s);
  EXPECT_NEAR(out.position.x(), 0.3, 1e-15);
  EXPECT_NEAR(out.position.y(), 0.0, 1e-15);
  EXPECT_NEAR(out.position.z(), 0.15, 1e-15);
  EXPECT_TRUE((out.orientation.array() == m.orientation.array()).all());
}

TEST(WorkspaceMap, IsAffine) {
  WorkspaceMap map;
  map.scale = Vec3(0.5, 2.0, 1.25);
  map.master_origin = Vec3(0.1, -0.2, 0.3);
  map.slave_origin = Vec3(0.5, 0.0, 0.25);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Pose a, b;
    a.position = Vec3(u(rng), u(rng), u(rng));
    b.position = Vec3(u(rng), u(rng), u(rng));
    const Vec3 lhs = map_workspace(a, map).position - map_workspace(b, map).position;
    const Vec3 rhs = map.scale.cwiseProduct(a.position - b.position);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(WorkspaceMap, NonPositiveScaleRejected) {
  WorkspaceMap map;
  map.scale = Vec3(1.0, 0.0, 1.0);
  EXPECT_THROW(map.validate(), std::invalid_argument);
}

TEST(KinematicChain, ValidationCatchesBadTables) {
  KinematicChain empty;
  EXPECT_THROW(empty.validate(), std::invalid_argument);

  auto chain = exoskeleton_chain();
  chain.limits[1] = {0.5, 0.5};
  EXPECT_THROW(chain.validate(), std::invalid_argument);

  chain = exoskeleton_chain();
  chain.rows[2].a = -0.1;
  EXPECT_THROW(chain.validate(), std::invalid_argument);

  chain = exoskeleton_chain();
  chain.limits.pop_back();
  EXPECT_THROW(chain.validate(), std::invalid_argument);
}

TEST(Rotation, ErrorVectorRecoversKnownRotation) {
  const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
  const Mat3 a = Eigen::AngleAxisd(0.4, Vec3::UnitY()).toRotationMatrix();
  const Mat3 b = Eigen::AngleAxisd(0.9, axis).toRotationMatrix() * a;
  const Vec3 w = rotation_error_vector(a, b);
  EXPECT_LT((w - 0.9 * axis).norm(), 1e-12);
  EXPECT_NEAR(rotation_angle_between(a, b), 0.9, 1e-12);
}
