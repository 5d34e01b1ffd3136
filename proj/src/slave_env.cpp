#include "mrtele/slave_env.hpp"

#include "mrtele/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mrtele::env {

const char* to_string(StiffnessClass label) {
  switch (label) {
    case StiffnessClass::high: return "high";
    case StiffnessClass::medium: return "medium";
    case StiffnessClass::low: return "low";
    case StiffnessClass::custom: return "custom";
  }
  return "custom";
}

StiffnessClass stiffness_class_from_string(const std::string& text) {
  if (text == "high") return StiffnessClass::high;
  if (text == "medium") return StiffnessClass::medium;
  if (text == "low") return StiffnessClass::low;
  if (text == "custom") return StiffnessClass::custom;
  throw InvalidArgument("unknown stiffness label '" + text + "'");
}

StiffnessPreset stiffness_preset(StiffnessClass label) {
  switch (label) {
    case StiffnessClass::high: return {176.78, 10.0};
    case StiffnessClass::medium: return {138.39, 10.0};
    case StiffnessClass::low: return {37.5, 10.0};
    case StiffnessClass::custom: break;
  }
  return {1.0e3, 10.0};
}

void RigidObject::validate() const {
  if (!center.allFinite()) throw InvalidArgument("object center must be finite");
  if (!(half_extents.minCoeff() > 0.0) || !half_extents.allFinite()) {
    throw InvalidArgument("object half_extents must be > 0");
  }
  if (!(stiffness > 0.0) || !std::isfinite(stiffness)) {
    throw InvalidArgument("object stiffness must be > 0");
  }
  if (!(damping >= 0.0) || !std::isfinite(damping)) {
    throw InvalidArgument("object damping must be >= 0");
  }
  if (!(force_cap > 0.0)) throw InvalidArgument("object force_cap must be > 0");
}

SlaveStep step_slave(const kinematics::KinematicChain& chain, const kinematics::JointVector& q,
                     const kinematics::Pose& target, double dt, const TrackerParams& tracker) {
  if (!(dt > 0.0)) throw InvalidArgument("step_slave: dt must be > 0");
  const auto ik = kinematics::inverse_kinematics_dls(chain, target, q, tracker.ik);
  if (!ik.converged) return {q, false};
  const double max_step = tracker.rate_limit * dt;
  kinematics::JointVector next = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    next[i] = q[i] + std::clamp(ik.q[i] - q[i], -max_step, max_step);
  }
  return {next, true};
}

ContactResult contact_force(const Vec3& ee_position, const Vec3& ee_velocity,
                            const std::vector<RigidObject>& objects, double timestamp) {
  ContactResult out;
  out.sample.timestamp = timestamp;
  int deepest = -1;
  double best_depth = 0.0;
  Vec3 best_normal = Vec3::Zero();

  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& obj = objects[i];
    const Vec3 rel = ee_position - obj.center;
    double depth = std::numeric_limits<double>::infinity();
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      const double exit = obj.half_extents[a] - std::abs(rel[a]);
      if (exit <= 0.0) {
        axis = -1;
        break;
      }
      if (exit < depth) {
        depth = exit;
        axis = a;
      }
    }
    if (axis < 0) continue;
    if (deepest < 0 || depth > best_depth) {
      deepest = static_cast<int>(i);
      best_depth = depth;
      best_normal = Vec3::Zero();
      best_normal[axis] = rel[axis] >= 0.0 ? 1.0 : -1.0;
    }
  }
  if (deepest < 0) return out;

  const auto& obj = objects[static_cast<std::size_t>(deepest)];
  double magnitude = obj.stiffness * best_depth + obj.damping * (-ee_velocity.dot(best_normal));
  magnitude = std::clamp(magnitude, 0.0, obj.force_cap);

  out.state.penetrating = true;
  out.state.depth = best_depth;
  out.state.normal = best_normal;
  out.state.object_label = obj.label;
  out.state.object_index = deepest;
  out.sample.force = magnitude * best_normal;
  return out;
}

ForceSample sense_force(const ForceSample& sample, double sigma, std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sense_force: sigma must be >= 0");
  if (sigma == 0.0) return sample;
  std::normal_distribution<double> noise(0.0, sigma);
  ForceSample out = sample;
  for (int i = 0; i < 3; ++i) out.force[i] += noise(rng);
  return out;
}

}  // namespace mrtele::env
