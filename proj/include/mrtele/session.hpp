#pragma once

#include "mrtele/channel.hpp"
#include "mrtele/scenario.hpp"
#include "mrtele/telemetry.hpp"

#include <deque>
#include <optional>
#include <random>
#include <vector>

namespace mrtele::session {

/// Largest single jog accepted from a live operator, per joint (rad).
inline constexpr double kMaxJogDelta = 0.1;

enum class OperatorCommandKind { jog, set_pose, demag };

struct OperatorCommand {
  OperatorCommandKind kind = OperatorCommandKind::demag;
  kinematics::JointVector value;  // joint deltas for jog, absolute angles for set_pose
};

/// The teleoperation loop. Each step() is one tick; commands queued between ticks
/// take effect at the start of the next one.
class Session {
 public:
  explicit Session(Scenario scenario);

  /// Checks a command against the scenario; throws InvalidArgument with the reason.
  void validate_command(const OperatorCommand& command) const;
  /// Validates and queues. Motion commands are refused for scripted runs.
  void enqueue(OperatorCommand command);

  const TelemetryRecord& step();

  std::size_t ticks_completed() const { return tick_; }
  bool finished() const { return tick_ >= scenario_.tick_count(); }
  double time() const { return static_cast<double>(tick_) * scenario_.dt(); }
  const Scenario& scenario() const { return scenario_; }
  bool interactive() const { return scenario_.script.interactive; }

  const TelemetryRecord& last_record() const { return record_; }
  const std::vector<clutch::ClutchState>& clutches() const { return clutches_; }
  const std::vector<feedback::JointCommand>& last_commands() const { return commands_; }
  const env::ContactState& contact() const { return contact_; }
  const kinematics::JointVector& master_q() const { return operator_.q; }
  const kinematics::JointVector& slave_q() const { return slave_q_; }

  /// Resistance felt at each master joint (clutch torque on actuated joints, zero elsewhere).
  Eigen::VectorXd resistance() const;

 private:
  void apply_commands(std::uint32_t& events);
  double report_torque() const;

  Scenario scenario_;
  kinematics::WorkspaceMap map_;
  std::size_t tick_ = 0;

  operator_model::OperatorState operator_;
  kinematics::JointVector jog_target_;
  std::deque<OperatorCommand> pending_;

  DelayChannel<kinematics::Pose> down_;
  DelayChannel<env::ForceSample> up_;
  std::mt19937_64 rng_down_;
  std::mt19937_64 rng_up_;
  std::mt19937_64 rng_sensor_;
  std::mt19937_64 rng_semg_;

  std::optional<kinematics::Pose> slave_target_;
  kinematics::JointVector slave_q_;
  kinematics::Vec3 slave_prev_position_ = kinematics::Vec3::Zero();
  env::ContactState contact_;
  env::ForceSample master_force_;

  std::vector<clutch::ClutchState> clutches_;
  std::vector<feedback::JointCommand> commands_;
  TelemetryRecord record_;
};

/// Runs every tick of the scenario.
std::vector<TelemetryRecord> run_scenario(const Scenario& scenario);

/// Torque used for reporting: the configured joint, or the largest actuated one.
double report_torque(const TelemetryRecord& record, const Scenario& scenario);

struct CollisionSummary {
  std::size_t first_tick = 0;   // first penetrating tick
  std::size_t last_tick = 0;    // last penetrating tick
  int object_index = -1;
  double window_start = 0.0;    // s, padded
  double window_end = 0.0;      // s, padded
  double rms_torque = 0.0;      // N·m over the padded window
  double peak_torque = 0.0;     // N·m over the padded window
  double rms_semg = 0.0;        // µV over the padded window
};

inline constexpr double kCollisionPadding = 0.050;  // s

/// Finds contact spans from the slave end-effector track and summarises each.
std::vector<CollisionSummary> analyze_collisions(const Scenario& scenario,
                                                 const std::vector<TelemetryRecord>& records);

/// Per-object target RMS torque for calibrate_environment.
struct CalibrationTarget {
  int object_index = 0;
  double rms_torque = 0.0;  // N·m
};

struct CalibrationReport {
  std::vector<double> stiffness;  // N/m, per object
  std::vector<double> achieved;   // N·m, mean collision RMS per target
  int runs = 0;
};

/// Tunes each targeted object's stiffness (log-space bisection) so its mean
/// collision RMS torque matches the target. Objects are tuned one after another.
CalibrationReport calibrate_environment(Scenario& scenario,
                                        const std::vector<CalibrationTarget>& targets,
                                        double rel_tol = 0.01, int max_runs_per_object = 40);

}  // namespace mrtele::session
