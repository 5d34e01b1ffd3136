#pragma once

#include "mrtele/channel.hpp"
#include "mrtele/clutch.hpp"
#include "mrtele/feedback.hpp"
#include "mrtele/kinematics.hpp"
#include "mrtele/operator_model.hpp"
#include "mrtele/slave_env.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrtele::session {

struct MasterConfig {
  kinematics::KinematicChain chain = kinematics::exoskeleton_chain();
  /// Start pose for interactive runs; scripted runs start at the first keyframe.
  kinematics::JointVector initial_q;
};

struct SlaveConfig {
  kinematics::KinematicChain chain = kinematics::default_slave_chain();
  kinematics::JointVector home_q;                    // empty = zeros
  std::optional<kinematics::JointVector> initial_q;  // empty = solved from the mapped start pose
  env::TrackerParams tracker;
};

struct MapConfig {
  kinematics::Vec3 scale = kinematics::Vec3::Ones();
  std::optional<kinematics::Vec3> master_origin;  // default: master ee at its start pose
  std::optional<kinematics::Vec3> slave_origin;   // default: slave ee at home_q
};

struct ScriptConfig {
  bool interactive = true;
  operator_model::TrajectoryScript trajectory;
  operator_model::OperatorModel model;
  operator_model::SEMGCalibration semg;
  double semg_noise = 5.0;  // µV, standard deviation
};

struct ClutchConfig {
  clutch::HillParams hill;
  clutch::ClutchSpec spec;
  clutch::ClutchDynamics dynamics;
};

struct RunConfig {
  std::string name = "scenario";
  double duration = 0.0;  // s
  std::uint64_t seed = 0;
  /// Zero-based master joint whose clutch torque is reported as "the" feedback
  /// torque for sEMG and collision RMS; -1 takes the largest actuated joint torque.
  int report_joint = -1;
  double sensor_noise = 0.0;  // N, standard deviation per force component
};

struct Scenario {
  MasterConfig master;
  SlaveConfig slave;
  MapConfig map;
  std::vector<env::RigidObject> objects;
  ScriptConfig script;
  feedback::FeedbackConfig feedback;
  ClutchConfig clutch;
  ChannelConfig channel;
  RunConfig run;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  std::size_t tick_count() const;
  double dt() const { return 1.0 / channel.tick_rate; }
};

/// Parses scenario JSON. Syntax errors raise ParseError with the line; unknown or
/// invalid keys raise ConfigError with the dotted key path.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

/// Canonical JSON for a scenario (every field written out, defaults included).
std::string scenario_to_json(const Scenario& scenario, int indent = 2);

}  // namespace mrtele::session
