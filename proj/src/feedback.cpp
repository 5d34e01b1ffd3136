#include "mrtele/feedback.hpp"

#include "mrtele/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrtele::feedback {

void FeedbackConfig::validate(const clutch::ClutchSpec& spec, std::size_t master_dof) const {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("gain must be > 0");
  if (!(current_limit > 0.0) || current_limit > spec.saturation_current) {
    throw InvalidArgument("current_limit must be in (0, saturation_current]");
  }
  if (!(torque_cap > 0.0) || torque_cap > spec.max_torque) {
    throw InvalidArgument("torque_cap must be in (0, max_torque]");
  }
  if (actuated_joints.empty()) throw InvalidArgument("actuated_joints is empty");
  for (int j : actuated_joints) {
    if (j < 0 || static_cast<std::size_t>(j) >= master_dof) {
      throw InvalidArgument("actuated joint " + std::to_string(j + 1) + " is not a master joint");
    }
  }
}

Eigen::VectorXd wrench_to_joint_torques(const kinematics::Jacobian& jacobian,
                                        const kinematics::Vec3& force,
                                        const kinematics::Vec3& moment) {
  if (jacobian.cols() == 0) throw InvalidArgument("wrench_to_joint_torques: empty Jacobian");
  Eigen::Matrix<double, 6, 1> wrench;
  wrench << force, moment;
  return jacobian.transpose() * wrench;
}

std::vector<JointCommand> commands_from_joint_torques(const Eigen::VectorXd& joint_torques,
                                                      const FeedbackConfig& config,
                                                      const clutch::HillParams& params) {
  std::vector<JointCommand> out;
  out.reserve(config.actuated_joints.size());
  const double invertible_max = 0.999 * params.v_max;
  for (int j : config.actuated_joints) {
    JointCommand cmd;
    cmd.joint_index = j;
    double tau = 0.0;
    if (j >= 0 && j < joint_torques.size()) tau = joint_torques[j];
    if (!std::isfinite(tau)) tau = std::numeric_limits<double>::infinity();
    cmd.target_torque = config.gain * std::abs(tau);

    double request = cmd.target_torque;
    if (request > config.torque_cap) {
      request = config.torque_cap;
      cmd.clamped = true;
    }
    if (request > invertible_max) {
      request = invertible_max;
      cmd.clamped = true;
    }
    double current = clutch::inverse_hill(params, request);
    if (current > config.current_limit) {
      current = config.current_limit;
      cmd.clamped = true;
    }
    cmd.current = current;
    out.push_back(cmd);
  }
  return out;
}

std::vector<JointCommand> feedback_pipeline(const env::ForceSample& sample,
                                            const kinematics::KinematicChain& master_chain,
                                            const kinematics::JointVector& master_q,
                                            const FeedbackConfig& config,
                                            const clutch::HillParams& params) {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(master_chain.dof()));
  if (sample.force.allFinite() && !sample.force.isZero(0.0)) {
    tau = wrench_to_joint_torques(kinematics::numeric_jacobian(master_chain, master_q),
                                  sample.force);
  } else if (!sample.force.allFinite()) {
    tau.setConstant(std::numeric_limits<double>::infinity());
  }
  return commands_from_joint_torques(tau, config, params);
}

void trigger_manual_demag(std::vector<clutch::ClutchState>& states) {
  for (auto& s : states) s = clutch::begin_demag(s);
}

}  // namespace mrtele::feedback
