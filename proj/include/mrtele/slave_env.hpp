#pragma once

#include "mrtele/kinematics.hpp"

#include <limits>
#include <random>
#include <string>
#include <vector>

namespace mrtele::env {

using kinematics::Vec3;

enum class StiffnessClass { high, medium, low, custom };

const char* to_string(StiffnessClass label);
StiffnessClass stiffness_class_from_string(const std::string& text);

/// Axis-aligned box obstacle with a penalty spring-damper surface.
struct RigidObject {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.05);
  double stiffness = 1.0e3;  // N/m
  double damping = 10.0;     // N·s/m
  StiffnessClass label = StiffnessClass::custom;
  /// Upper bound on the normal force, used for granular media that yield.
  double force_cap = std::numeric_limits<double>::infinity();  // N

  void validate() const;
};

struct StiffnessPreset {
  double stiffness;  // N/m
  double damping;    // N·s/m
};

/// Calibrated surface parameters per class (see tools `calibrate-env`).
StiffnessPreset stiffness_preset(StiffnessClass label);

struct ContactState {
  bool penetrating = false;
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();
  StiffnessClass object_label = StiffnessClass::custom;
  int object_index = -1;
};

struct ForceSample {
  Vec3 force = Vec3::Zero();  // N, slave base frame
  double timestamp = 0.0;     // s
};

struct ContactResult {
  ForceSample sample;
  ContactState state;
};

struct TrackerParams {
  double rate_limit = 3.0;  // rad/s per joint
  kinematics::IkParams ik;
};

struct SlaveStep {
  kinematics::JointVector q;
  bool ik_converged = true;
};

/// One servo tick: IK toward the target seeded at the current angles, then a
/// per-joint rate clamp. On IK failure the slave holds its pose.
SlaveStep step_slave(const kinematics::KinematicChain& chain, const kinematics::JointVector& q,
                     const kinematics::Pose& target, double dt, const TrackerParams& tracker);

/// Penalty contact against the deepest-penetrated box. The normal points out of
/// the box along the axis of least exit distance; the force never pulls inward.
ContactResult contact_force(const Vec3& ee_position, const Vec3& ee_velocity,
                            const std::vector<RigidObject>& objects, double timestamp = 0.0);

/// Adds independent zero-mean Gaussian noise to each force component.
ForceSample sense_force(const ForceSample& sample, double sigma, std::mt19937_64& rng);

}  // namespace mrtele::env
