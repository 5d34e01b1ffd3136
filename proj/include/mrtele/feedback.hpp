#pragma once

#include "mrtele/clutch.hpp"
#include "mrtele/kinematics.hpp"
#include "mrtele/slave_env.hpp"

#include <vector>

namespace mrtele::feedback {

struct FeedbackConfig {
  double gain = 5.0;
  double current_limit = 1.3;  // A
  double torque_cap = 42.12;   // N·m
  std::vector<int> actuated_joints = {0, 1, 2, 3};  // zero-based master joint indices

  /// Checks gain > 0 and the limits against the clutch ratings.
  void validate(const clutch::ClutchSpec& spec, std::size_t master_dof) const;
};

struct JointCommand {
  int joint_index = 0;
  double current = 0.0;        // A
  double target_torque = 0.0;  // N·m, gain * |tau| before clamping
  bool clamped = false;
};

/// tau = J^T [force; moment].
Eigen::VectorXd wrench_to_joint_torques(const kinematics::Jacobian& jacobian,
                                        const kinematics::Vec3& force,
                                        const kinematics::Vec3& moment = kinematics::Vec3::Zero());

/// Force sample -> per-clutch current commands. Clamps instead of throwing.
std::vector<JointCommand> feedback_pipeline(const env::ForceSample& sample,
                                            const kinematics::KinematicChain& master_chain,
                                            const kinematics::JointVector& master_q,
                                            const FeedbackConfig& config,
                                            const clutch::HillParams& params);

/// Same mapping when the joint torques are already known.
std::vector<JointCommand> commands_from_joint_torques(const Eigen::VectorXd& joint_torques,
                                                      const FeedbackConfig& config,
                                                      const clutch::HillParams& params);

/// Manual release button: every clutch enters demag mode from its present magnetization.
void trigger_manual_demag(std::vector<clutch::ClutchState>& states);

}  // namespace mrtele::feedback
