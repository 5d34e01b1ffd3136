#pragma once

#include "mrtele/kinematics.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace mrtele::operator_model {

using kinematics::JointVector;

struct Keyframe {
  double time = 0.0;  // s
  JointVector q;
};

/// Replanning reflex: when the felt resistance exceeds `retreat_torque` for
/// `reaction_time`, the operator backs off by `retreat_offset` until the resistance
/// has dropped below half the threshold, then resumes the script.
struct Reflex {
  double retreat_torque = 4.0;   // N·m
  JointVector retreat_offset;    // rad, empty = no retreat motion
  double reaction_time = 0.0;    // s
  double retreat_speed = 1.0;    // rad/s
};

struct TrajectoryScript {
  std::vector<Keyframe> keyframes;
  Reflex reflex;

  void validate(std::size_t dof) const;
  /// Piecewise-linear joint targets, held at both ends.
  JointVector sample(double t) const;
  double end_time() const;
};

struct OperatorModel {
  double lock_torque = 42.12;  // N·m, resistance at which a joint stops
  double max_speed = 2.0;      // rad/s the operator can move any joint
};

struct OperatorState {
  JointVector q;
  bool retreating = false;
  double semg = 0.0;                   // µV
  JointVector retreat_target;
  std::optional<double> over_threshold_since;  // s
};

/// Affine torque -> sEMG map, optionally replaced by a piecewise-linear table.
struct SEMGCalibration {
  double intercept = 29.894230769230766;  // µV
  double slope = 21.831014729950903;      // µV per N·m
  std::vector<std::pair<double, double>> table;  // (N·m, µV), ascending torque

  void validate() const;
};

/// Least-squares line through (torque, semg) pairs.
SEMGCalibration fit_semg_calibration(const std::vector<std::pair<double, double>>& pairs);

/// The six (torque, sEMG) reference pairs the default calibration is fitted to.
const std::vector<std::pair<double, double>>& reference_semg_pairs();

/// Advances the operator by dt from time t. `resistance` is per master joint (N·m).
OperatorState scripted_operator_step(const TrajectoryScript& script, const OperatorState& state,
                                     double t, const Eigen::VectorXd& resistance, double dt,
                                     const OperatorModel& model);

/// Tracking toward an explicit target (interactive jog mode), same compliance law.
OperatorState interactive_operator_step(const JointVector& target, const OperatorState& state,
                                        const Eigen::VectorXd& resistance, double dt,
                                        const OperatorModel& model);

double semg_proxy(double resisted_torque, const SEMGCalibration& cal);

struct TimedValue {
  double t = 0.0;
  double value = 0.0;
};

/// RMS over samples with t in [t0, t1]. Throws InvalidArgument if none fall inside.
double rms_window(const std::vector<TimedValue>& samples, double t0, double t1);

}  // namespace mrtele::operator_model
