#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mrtele::kinematics {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Matrix4d;
using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// One row of a modified (Craig) D-H table. `alpha` and `a` are the
/// alpha_{i-1}, a_{i-1} that precede joint i; `d` and the joint angle belong to joint i.
struct DHRow {
  double alpha = 0.0;
  double a = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double min = -3.14159265358979323846;
  double max = 3.14159265358979323846;
};

struct KinematicChain {
  std::vector<DHRow> rows;
  std::vector<JointLimit> limits;
  std::string name;

  std::size_t dof() const { return rows.size(); }

  /// Throws InvalidArgument if the chain is empty, limits are not one per row,
  /// any limit has min >= max, or a row violates a >= 0 / finiteness.
  void validate() const;

  JointVector clamp(const JointVector& q) const;
  bool within_limits(const JointVector& q, double slack = 0.0) const;
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
};

/// Proportional master->slave position map. Orientation passes through untouched.
struct WorkspaceMap {
  Vec3 scale = Vec3::Ones();
  Vec3 master_origin = Vec3::Zero();
  Vec3 slave_origin = Vec3::Zero();

  void validate() const;
};

struct IkParams {
  double lambda = 0.05;
  double tol = 1e-6;       // m
  double tol_rot = 1e-4;   // rad
  int max_iters = 200;
};

struct IkResult {
  JointVector q;
  bool converged = false;
  int iterations = 0;
  double position_error = 0.0;
  double orientation_error = 0.0;
};

/// ^{i-1}T_i for one row at joint angle `theta` (offset added).
Transform dh_transform(const DHRow& row, double theta);

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q);

/// Central-difference Jacobian: rows 0..2 linear velocity, 3..5 angular velocity,
/// both in the base frame. Ignores joint limits.
Jacobian numeric_jacobian(const KinematicChain& chain, const JointVector& q, double step = 1e-6);

/// Damped least squares on the full pose error, joint limits clamped every iteration.
/// Never throws on non-convergence; returns the best iterate with converged=false.
IkResult inverse_kinematics_dls(const KinematicChain& chain, const Pose& target,
                                const JointVector& seed, const IkParams& params = {});

Pose map_workspace(const Pose& master, const WorkspaceMap& map);

/// Angle (rad) of the relative rotation a^T b.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Axis-angle vector w such that exp([w]x) * current = target.
Vec3 rotation_error_vector(const Mat3& current, const Mat3& target);

/// Five-row exoskeleton arm (shoulder 1-3, elbow 4, wrist IMU as virtual joint 5).
/// Link lengths are configuration, the defaults represent an adult arm.
KinematicChain exoskeleton_chain(const std::vector<double>& link_lengths = {0.28, 0.05, 0.25, 0.07});

/// Seven-row redundant slave arm with a tool offset on the last row.
KinematicChain default_slave_chain();

}  // namespace mrtele::kinematics
