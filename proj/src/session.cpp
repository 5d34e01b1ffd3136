#include "mrtele/session.hpp"

#include "mrtele/errors.hpp"
#include "mrtele/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mrtele::session {

namespace {

Vec3d to_array(const kinematics::Vec3& v) { return {v.x(), v.y(), v.z()}; }

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

kinematics::JointVector master_start(const Scenario& sc) {
  if (!sc.script.interactive) return sc.script.trajectory.sample(0.0);
  if (sc.master.initial_q.size() > 0) return sc.master.chain.clamp(sc.master.initial_q);
  return kinematics::JointVector::Zero(static_cast<Eigen::Index>(sc.master.chain.dof()));
}

kinematics::JointVector slave_home(const Scenario& sc) {
  if (sc.slave.home_q.size() > 0) return sc.slave.home_q;
  return kinematics::JointVector::Zero(static_cast<Eigen::Index>(sc.slave.chain.dof()));
}

}  // namespace

Session::Session(Scenario scenario)
    : scenario_(std::move(scenario)),
      down_(scenario_.channel),
      up_(scenario_.channel),
      rng_down_(substream(scenario_.run.seed, "channel.down")),
      rng_up_(substream(scenario_.run.seed, "channel.up")),
      rng_sensor_(substream(scenario_.run.seed, "sensor")),
      rng_semg_(substream(scenario_.run.seed, "semg")) {
  scenario_.validate();
  const auto& sc = scenario_;

  operator_.q = master_start(sc);
  operator_.semg = 0.0;
  jog_target_ = operator_.q;

  const kinematics::Pose master_pose = kinematics::forward_kinematics(sc.master.chain, operator_.q);
  const kinematics::JointVector home = slave_home(sc);
  map_.scale = sc.map.scale;
  map_.master_origin = sc.map.master_origin.value_or(master_pose.position);
  map_.slave_origin =
      sc.map.slave_origin.value_or(kinematics::forward_kinematics(sc.slave.chain, home).position);

  if (sc.slave.initial_q) {
    slave_q_ = sc.slave.chain.clamp(*sc.slave.initial_q);
  } else {
    const auto target = kinematics::map_workspace(master_pose, map_);
    kinematics::IkParams ik = sc.slave.tracker.ik;
    ik.max_iters = std::max(ik.max_iters, 1000);
    slave_q_ = kinematics::inverse_kinematics_dls(sc.slave.chain, target, sc.slave.chain.clamp(home), ik).q;
  }
  slave_prev_position_ = kinematics::forward_kinematics(sc.slave.chain, slave_q_).position;

  clutches_.assign(sc.feedback.actuated_joints.size(), clutch::ClutchState{});
  for (auto& c : clutches_) c.output_torque = clutch::output_torque(sc.clutch.hill, sc.clutch.spec, 0.0);
  commands_.clear();
  for (int j : sc.feedback.actuated_joints) {
    feedback::JointCommand cmd;
    cmd.joint_index = j;
    commands_.push_back(cmd);
  }
}

void Session::validate_command(const OperatorCommand& command) const {
  const auto dof = static_cast<Eigen::Index>(scenario_.master.chain.dof());
  switch (command.kind) {
    case OperatorCommandKind::demag:
      return;
    case OperatorCommandKind::jog:
      if (!interactive()) throw InvalidArgument("motion commands are refused during a scripted run");
      if (command.value.size() != dof) {
        throw InvalidArgument("jog needs " + std::to_string(dof) + " joint deltas");
      }
      if (!command.value.allFinite()) throw InvalidArgument("jog deltas must be finite");
      if (command.value.cwiseAbs().maxCoeff() > kMaxJogDelta) {
        throw InvalidArgument("jog delta exceeds " + format_double(kMaxJogDelta) + " rad");
      }
      return;
    case OperatorCommandKind::set_pose:
      if (!interactive()) throw InvalidArgument("motion commands are refused during a scripted run");
      if (command.value.size() != dof) {
        throw InvalidArgument("set_pose needs " + std::to_string(dof) + " joint angles");
      }
      if (!command.value.allFinite()) throw InvalidArgument("set_pose angles must be finite");
      if (!scenario_.master.chain.within_limits(command.value)) {
        throw InvalidArgument("set_pose angles are outside the joint limits");
      }
      return;
  }
}

void Session::enqueue(OperatorCommand command) {
  validate_command(command);
  pending_.push_back(std::move(command));
}

void Session::apply_commands(std::uint32_t& events) {
  while (!pending_.empty()) {
    const OperatorCommand cmd = std::move(pending_.front());
    pending_.pop_front();
    events |= kEventCommand;
    switch (cmd.kind) {
      case OperatorCommandKind::demag:
        feedback::trigger_manual_demag(clutches_);
        break;
      case OperatorCommandKind::jog:
        jog_target_ = scenario_.master.chain.clamp(jog_target_ + cmd.value);
        break;
      case OperatorCommandKind::set_pose:
        jog_target_ = cmd.value;
        break;
    }
  }
}

Eigen::VectorXd Session::resistance() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scenario_.master.chain.dof()));
  for (std::size_t i = 0; i < clutches_.size(); ++i) {
    r[scenario_.feedback.actuated_joints[i]] = clutches_[i].output_torque;
  }
  return r;
}

double Session::report_torque() const {
  const int joint = scenario_.run.report_joint;
  double out = 0.0;
  for (std::size_t i = 0; i < clutches_.size(); ++i) {
    const int j = scenario_.feedback.actuated_joints[i];
    if (joint < 0) {
      out = std::max(out, clutches_[i].output_torque);
    } else if (j == joint) {
      out = clutches_[i].output_torque;
    }
  }
  return out;
}

const TelemetryRecord& Session::step() {
  const Scenario& sc = scenario_;
  const double dt = sc.dt();
  const double t = static_cast<double>(tick_) * dt;
  std::uint32_t events = 0;

  apply_commands(events);

  if (tick_ > 0) {
    const Eigen::VectorXd r = resistance();
    if (sc.script.interactive) {
      operator_ = operator_model::interactive_operator_step(jog_target_, operator_, r, dt, sc.script.model);
    } else {
      operator_ = operator_model::scripted_operator_step(sc.script.trajectory, operator_, t - dt, r,
                                                         dt, sc.script.model);
    }
  }

  const kinematics::Pose master_pose = kinematics::forward_kinematics(sc.master.chain, operator_.q);
  const kinematics::Pose target = kinematics::map_workspace(master_pose, map_);

  for (auto& msg : down_.deliver(t)) slave_target_ = std::move(msg.payload);
  down_.send(target, t, rng_down_);

  if (slave_target_) {
    const env::SlaveStep s = env::step_slave(sc.slave.chain, slave_q_, *slave_target_, dt, sc.slave.tracker);
    slave_q_ = s.q;
    if (!s.ik_converged) events |= kEventIkFail;
  }
  const kinematics::Pose slave_pose = kinematics::forward_kinematics(sc.slave.chain, slave_q_);
  const kinematics::Vec3 velocity =
      tick_ > 0 ? kinematics::Vec3((slave_pose.position - slave_prev_position_) / dt)
                : kinematics::Vec3::Zero();
  slave_prev_position_ = slave_pose.position;

  const env::ContactResult contact = env::contact_force(slave_pose.position, velocity, sc.objects, t);
  if (contact.state.penetrating && !contact_.penetrating) events |= kEventCollision;
  contact_ = contact.state;
  const env::ForceSample sensed = env::sense_force(contact.sample, sc.run.sensor_noise, rng_sensor_);

  for (auto& msg : up_.deliver(t)) master_force_ = std::move(msg.payload);
  up_.send(sensed, t, rng_up_);

  // The clutches integrate the previous tick's commands over [t - dt, t].
  if (tick_ > 0) {
    for (std::size_t i = 0; i < clutches_.size(); ++i) {
      clutches_[i] = clutch::step_magnetization(clutches_[i], commands_[i].current, dt, sc.clutch.hill,
                                                sc.clutch.spec, sc.clutch.dynamics);
    }
  }

  commands_ = feedback::feedback_pipeline(master_force_, sc.master.chain, operator_.q, sc.feedback,
                                          sc.clutch.hill);
  for (const auto& c : commands_) {
    if (c.clamped) events |= kEventClamp;
  }
  for (const auto& c : clutches_) {
    if (c.mode == clutch::ClutchMode::demag) events |= kEventDemag;
  }

  double semg = operator_model::semg_proxy(report_torque(), sc.script.semg);
  if (sc.script.semg_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, sc.script.semg_noise);
    semg += noise(rng_semg_);
  }
  operator_.semg = std::max(0.0, semg);

  TelemetryRecord rec;
  rec.t = t;
  rec.master_q = to_std(operator_.q);
  rec.slave_q = to_std(slave_q_);
  rec.master_ee = to_array(master_pose.position);
  rec.slave_ee = to_array(slave_pose.position);
  rec.force = to_array(master_force_.force);
  for (std::size_t i = 0; i < clutches_.size(); ++i) {
    rec.current.push_back(clutches_[i].mode == clutch::ClutchMode::demag
                              ? clutch::coil_current(clutches_[i], sc.clutch.dynamics.demag)
                              : commands_[i].current);
    rec.tau.push_back(clutches_[i].output_torque);
  }
  rec.semg = operator_.semg;
  rec.events = events;
  record_ = std::move(rec);
  ++tick_;
  return record_;
}

std::vector<TelemetryRecord> run_scenario(const Scenario& scenario) {
  Session session(scenario);
  std::vector<TelemetryRecord> out;
  const std::size_t n = scenario.tick_count();
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(session.step());
  return out;
}

double report_torque(const TelemetryRecord& record, const Scenario& scenario) {
  const int joint = scenario.run.report_joint;
  double out = 0.0;
  for (std::size_t i = 0; i < record.tau.size() && i < scenario.feedback.actuated_joints.size(); ++i) {
    if (joint < 0) {
      out = std::max(out, record.tau[i]);
    } else if (scenario.feedback.actuated_joints[i] == joint) {
      out = record.tau[i];
    }
  }
  return out;
}

std::vector<CollisionSummary> analyze_collisions(const Scenario& scenario,
                                                 const std::vector<TelemetryRecord>& records) {
  std::vector<CollisionSummary> out;
  const kinematics::Vec3 still = kinematics::Vec3::Zero();
  bool inside = false;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& ee = records[k].slave_ee;
    const auto c = env::contact_force({ee[0], ee[1], ee[2]}, still, scenario.objects).state;
    if (c.penetrating && !inside) {
      CollisionSummary s;
      s.first_tick = k;
      s.last_tick = k;
      s.object_index = c.object_index;
      out.push_back(s);
    } else if (c.penetrating) {
      out.back().last_tick = k;
    }
    inside = c.penetrating;
  }

  for (auto& s : out) {
    s.window_start = records[s.first_tick].t - kCollisionPadding;
    s.window_end = records[s.last_tick].t + kCollisionPadding;
    std::vector<operator_model::TimedValue> torque, semg;
    for (const auto& r : records) {
      if (r.t < s.window_start - 1e-12) continue;
      if (r.t > s.window_end + 1e-12) break;
      const double tau = report_torque(r, scenario);
      torque.push_back({r.t, tau});
      semg.push_back({r.t, r.semg});
      s.peak_torque = std::max(s.peak_torque, tau);
    }
    s.rms_torque = operator_model::rms_window(torque, s.window_start - 1e-12, s.window_end + 1e-12);
    s.rms_semg = operator_model::rms_window(semg, s.window_start - 1e-12, s.window_end + 1e-12);
  }
  return out;
}

namespace {

double mean_rms_for(const Scenario& scenario, int object_index) {
  const auto collisions = analyze_collisions(scenario, run_scenario(scenario));
  double sum = 0.0;
  int n = 0;
  for (const auto& c : collisions) {
    if (c.object_index == object_index) {
      sum += c.rms_torque;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace

CalibrationReport calibrate_environment(Scenario& scenario, const std::vector<CalibrationTarget>& targets,
                                        double rel_tol, int max_runs_per_object) {
  if (!(rel_tol > 0.0)) throw InvalidArgument("calibration tolerance must be > 0");
  constexpr double kMinStiffness = 1.0;
  constexpr double kMaxStiffness = 1.0e7;
  CalibrationReport report;
  for (const auto& target : targets) {
    if (target.object_index < 0 || static_cast<std::size_t>(target.object_index) >= scenario.objects.size()) {
      throw InvalidArgument("calibration target names object " + std::to_string(target.object_index) +
                            ", scenario has " + std::to_string(scenario.objects.size()));
    }
    if (!(target.rms_torque > 0.0)) throw InvalidArgument("calibration target torque must be > 0");
    auto& object = scenario.objects[static_cast<std::size_t>(target.object_index)];

    auto evaluate = [&](double log_k) {
      object.stiffness = std::exp(log_k);
      ++report.runs;
      return mean_rms_for(scenario, target.object_index) - target.rms_torque;
    };

    double best_log = std::log(object.stiffness);
    double best_err = evaluate(best_log);
    int runs = 1;
    double lo = best_log, hi = best_log;
    double f_lo = best_err, f_hi = best_err;
    // Expand geometrically until the target is bracketed.
    while (f_lo > 0.0 && lo > std::log(kMinStiffness) && runs < max_runs_per_object) {
      hi = lo;
      f_hi = f_lo;
      lo -= std::log(4.0);
      f_lo = evaluate(lo);
      ++runs;
      if (std::abs(f_lo) < std::abs(best_err)) best_log = lo, best_err = f_lo;
    }
    while (f_hi < 0.0 && hi < std::log(kMaxStiffness) && runs < max_runs_per_object) {
      lo = hi;
      f_lo = f_hi;
      hi += std::log(4.0);
      f_hi = evaluate(hi);
      ++runs;
      if (std::abs(f_hi) < std::abs(best_err)) best_log = hi, best_err = f_hi;
    }
    while (std::abs(best_err) > rel_tol * target.rms_torque && f_lo <= 0.0 && f_hi >= 0.0 &&
           hi - lo > std::log(1.001) && runs < max_runs_per_object) {
      const double mid = 0.5 * (lo + hi);
      const double f = evaluate(mid);
      ++runs;
      if (std::abs(f) < std::abs(best_err)) best_log = mid, best_err = f;
      if (f < 0.0) {
        lo = mid;
        f_lo = f;
      } else {
        hi = mid;
        f_hi = f;
      }
    }
    // A bracket that collapsed without meeting the tolerance straddles a jump in
    // the response (e.g. the peak first crossing the reflex threshold). Step a
    // little away from the edge so the result does not sit on the discontinuity.
    if (std::abs(best_err) > rel_tol * target.rms_torque && hi - lo < std::log(1.01)) {
      const double away = best_log == hi ? hi + std::log(1.02) : lo - std::log(1.02);
      const double f = evaluate(away);
      if (std::abs(f) < 3.0 * std::abs(best_err)) best_log = away, best_err = f;
    }
    object.stiffness = std::exp(best_log);
    report.achieved.push_back(best_err + target.rms_torque);
  }
  for (const auto& o : scenario.objects) report.stiffness.push_back(o.stiffness);
  return report;
}

}  // namespace mrtele::session
