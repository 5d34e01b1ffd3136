#include "mrtele/operator_model.hpp"

#include "mrtele/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mrtele::operator_model {

void TrajectoryScript::validate(std::size_t dof) const {
  if (keyframes.empty()) throw InvalidArgument("script has no keyframes");
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    if (static_cast<std::size_t>(keyframes[i].q.size()) != dof) {
      throw InvalidArgument("keyframe " + std::to_string(i) + " has " +
                            std::to_string(keyframes[i].q.size()) + " angles, master has " +
                            std::to_string(dof));
    }
    if (!keyframes[i].q.allFinite() || !std::isfinite(keyframes[i].time)) {
      throw InvalidArgument("keyframe " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(keyframes[i].time > keyframes[i - 1].time)) {
      throw InvalidArgument("keyframe times must be strictly increasing");
    }
  }
  if (!(reflex.retreat_torque > 0.0)) throw InvalidArgument("retreat_torque must be > 0");
  if (reflex.retreat_offset.size() != 0 &&
      static_cast<std::size_t>(reflex.retreat_offset.size()) != dof) {
    throw InvalidArgument("retreat_offset must match the master joint count");
  }
  if (!(reflex.reaction_time >= 0.0)) throw InvalidArgument("reaction_time must be >= 0");
  if (!(reflex.retreat_speed > 0.0)) throw InvalidArgument("retreat_speed must be > 0");
}

JointVector TrajectoryScript::sample(double t) const {
  if (t <= keyframes.front().time) return keyframes.front().q;
  if (t >= keyframes.back().time) return keyframes.back().q;
  const auto upper = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                                      [](double v, const Keyframe& k) { return v < k.time; });
  const auto& b = *upper;
  const auto& a = *(upper - 1);
  const double s = (t - a.time) / (b.time - a.time);
  return a.q + s * (b.q - a.q);
}

double TrajectoryScript::end_time() const { return keyframes.back().time; }

void SEMGCalibration::validate() const {
  if (!table.empty()) {
    if (table.size() < 2) throw InvalidArgument("sEMG table needs at least two points");
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (!(table[i].first > table[i - 1].first)) {
        throw InvalidArgument("sEMG table torques must be strictly increasing");
      }
    }
    return;
  }
  if (!(intercept >= 0.0)) throw InvalidArgument("sEMG intercept must be >= 0");
  if (!(slope > 0.0)) throw InvalidArgument("sEMG slope must be > 0");
}

SEMGCalibration fit_semg_calibration(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw InvalidArgument("sEMG fit needs at least two pairs");
  const double n = static_cast<double>(pairs.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pairs) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("sEMG fit needs distinct torques");
  SEMGCalibration cal;
  cal.slope = sxy / sxx;
  cal.intercept = my - cal.slope * mx;
  return cal;
}

const std::vector<std::pair<double, double>>& reference_semg_pairs() {
  static const std::vector<std::pair<double, double>> pairs = {
      {0.0, 37.0}, {2.8, 86.0}, {4.2, 118.0}, {5.3, 141.0}, {7.1, 185.0}, {8.8, 228.0}};
  return pairs;
}

namespace {

// Moves q toward `desired` at most max_speed*dt per joint, each joint slowed by
// the clutch resistance it feels. Lands exactly on `desired` when nothing limits it.
JointVector compliant_track(const JointVector& q, const JointVector& desired,
                            const Eigen::VectorXd& resistance, double dt,
                            const OperatorModel& model) {
  JointVector next = q;
  const double max_step = model.max_speed * dt;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double r = i < resistance.size() ? resistance[i] : 0.0;
    const double scale = std::max(0.0, 1.0 - r / model.lock_torque);
    const double delta = desired[i] - q[i];
    const double limited = std::clamp(delta, -max_step, max_step);
    if (scale == 1.0 && limited == delta) {
      next[i] = desired[i];
    } else {
      next[i] = q[i] + scale * limited;
    }
  }
  return next;
}

}  // namespace

OperatorState scripted_operator_step(const TrajectoryScript& script, const OperatorState& state,
                                     double t, const Eigen::VectorXd& resistance, double dt,
                                     const OperatorModel& model) {
  if (!(dt > 0.0)) throw InvalidArgument("scripted_operator_step: dt must be > 0");
  OperatorState next = state;
  const double felt = resistance.size() > 0 ? resistance.maxCoeff() : 0.0;
  const auto& reflex = script.reflex;

  if (!state.retreating) {
    if (felt > reflex.retreat_torque) {
      if (!next.over_threshold_since) next.over_threshold_since = t;
      if (t + dt - *next.over_threshold_since >= reflex.reaction_time - 1e-12) {
        next.retreating = true;
        next.over_threshold_since.reset();
        next.retreat_target = state.q;
        if (reflex.retreat_offset.size() == state.q.size()) next.retreat_target += reflex.retreat_offset;
      }
    } else {
      next.over_threshold_since.reset();
    }
  } else if (felt < 0.5 * reflex.retreat_torque) {
    next.retreating = false;
  }

  if (next.retreating) {
    // Backing off is the operator pulling against nothing: not slowed by the brake.
    const double max_step = reflex.retreat_speed * dt;
    for (Eigen::Index i = 0; i < next.q.size(); ++i) {
      next.q[i] += std::clamp(next.retreat_target[i] - state.q[i], -max_step, max_step);
    }
  } else {
    next.q = compliant_track(state.q, script.sample(t + dt), resistance, dt, model);
  }
  return next;
}

OperatorState interactive_operator_step(const JointVector& target, const OperatorState& state,
                                        const Eigen::VectorXd& resistance, double dt,
                                        const OperatorModel& model) {
  if (!(dt > 0.0)) throw InvalidArgument("interactive_operator_step: dt must be > 0");
  OperatorState next = state;
  next.q = compliant_track(state.q, target, resistance, dt, model);
  return next;
}

double semg_proxy(double resisted_torque, const SEMGCalibration& cal) {
  if (!(resisted_torque >= 0.0)) throw InvalidArgument("semg_proxy: torque must be >= 0");
  if (cal.table.empty()) return cal.intercept + cal.slope * resisted_torque;

  const auto& tab = cal.table;
  std::size_t hi = 1;
  while (hi + 1 < tab.size() && resisted_torque > tab[hi].first) ++hi;
  const auto& a = tab[hi - 1];
  const auto& b = tab[hi];
  const double s = (resisted_torque - a.first) / (b.first - a.first);
  return a.second + s * (b.second - a.second);
}

double rms_window(const std::vector<TimedValue>& samples, double t0, double t1) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    if (s.t >= t0 && s.t <= t1) {
      acc += s.value * s.value;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("rms_window: no samples in window");
  return std::sqrt(acc / static_cast<double>(count));
}

}  // namespace mrtele::operator_model
