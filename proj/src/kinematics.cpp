#include "mrtele/kinematics.hpp"

#include "mrtele/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mrtele::kinematics {

namespace {

bool finite(double v) { return std::isfinite(v); }

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

void require_size(const KinematicChain& chain, const JointVector& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof()) {
    throw InvalidArgument("joint vector has " + std::to_string(q.size()) + " entries, chain '" +
                          chain.name + "' has " + std::to_string(chain.dof()) + " rows");
  }
}

constexpr double kMaxStepNorm = 0.5;  // rad, per DLS iteration

}  // namespace

void KinematicChain::validate() const {
  if (rows.empty()) throw InvalidArgument("chain '" + name + "' has no rows");
  if (limits.size() != rows.size()) {
    throw InvalidArgument("chain '" + name + "' needs one joint limit per row");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!finite(r.alpha) || !finite(r.a) || !finite(r.d) || !finite(r.theta_offset)) {
      throw InvalidArgument("chain '" + name + "' row " + std::to_string(i + 1) + " is not finite");
    }
    if (r.a < 0.0) {
      throw InvalidArgument("chain '" + name + "' row " + std::to_string(i + 1) + " has a < 0");
    }
    if (!(limits[i].min < limits[i].max)) {
      throw InvalidArgument("chain '" + name + "' joint " + std::to_string(i + 1) +
                            " limits need min < max");
    }
  }
}

JointVector KinematicChain::clamp(const JointVector& q) const {
  JointVector out = q;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto& lim = limits[static_cast<std::size_t>(i)];
    out[i] = std::clamp(out[i], lim.min, lim.max);
  }
  return out;
}

bool KinematicChain::within_limits(const JointVector& q, double slack) const {
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const auto& lim = limits[static_cast<std::size_t>(i)];
    if (q[i] < lim.min - slack || q[i] > lim.max + slack) return false;
  }
  return true;
}

void WorkspaceMap::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(scale[i] > 0.0) || !finite(scale[i])) {
      throw InvalidArgument("workspace scale components must be > 0");
    }
  }
  if (!master_origin.allFinite() || !slave_origin.allFinite()) {
    throw InvalidArgument("workspace origins must be finite");
  }
}

Transform dh_transform(const DHRow& row, double theta) {
  if (!finite(theta) || !finite(row.alpha) || !finite(row.a) || !finite(row.d) ||
      !finite(row.theta_offset)) {
    throw InvalidArgument("dh_transform: non-finite input");
  }
  const double th = theta + row.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);

  Transform t;
  t << ct, -st, 0.0, row.a,
       st * ca, ct * ca, -sa, -sa * row.d,
       st * sa, ct * sa, ca, ca * row.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q) {
  require_size(chain, q);
  Transform t = Transform::Identity();
  for (std::size_t i = 0; i < chain.rows.size(); ++i) {
    t = t * dh_transform(chain.rows[i], q[static_cast<Eigen::Index>(i)]);
  }
  return {t.block<3, 1>(0, 3), t.block<3, 3>(0, 0)};
}

Jacobian numeric_jacobian(const KinematicChain& chain, const JointVector& q, double step) {
  require_size(chain, q);
  const auto n = static_cast<Eigen::Index>(chain.dof());
  Jacobian jac(6, n);
  const Mat3 r0 = forward_kinematics(chain, q).orientation;
  JointVector qp = q, qm = q;
  for (Eigen::Index i = 0; i < n; ++i) {
    qp[i] = q[i] + step;
    qm[i] = q[i] - step;
    const Pose fp = forward_kinematics(chain, qp);
    const Pose fm = forward_kinematics(chain, qm);
    jac.block<3, 1>(0, i) = (fp.position - fm.position) / (2.0 * step);
    const Mat3 dr = (fp.orientation - fm.orientation) / (2.0 * step);
    const Mat3 w_hat = dr * r0.transpose();
    jac.block<3, 1>(3, i) = vee(0.5 * (w_hat - w_hat.transpose()));
    qp[i] = q[i];
    qm[i] = q[i];
  }
  return jac;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Eigen::AngleAxisd aa(Mat3(a.transpose() * b));
  return std::abs(aa.angle());
}

Vec3 rotation_error_vector(const Mat3& current, const Mat3& target) {
  const Eigen::AngleAxisd aa(Mat3(target * current.transpose()));
  return aa.angle() * aa.axis();
}

IkResult inverse_kinematics_dls(const KinematicChain& chain, const Pose& target,
                                const JointVector& seed, const IkParams& params) {
  require_size(chain, seed);
  IkResult best;
  JointVector q = chain.clamp(seed);
  double best_cost = std::numeric_limits<double>::infinity();

  double lambda_sq = params.lambda * params.lambda;
  constexpr double kMinLambdaSq = 1e-12;
  constexpr double kMaxLambdaSq = 1e4;

  auto residual = [&](const JointVector& qq, Eigen::Matrix<double, 6, 1>& err) {
    const Pose pose = forward_kinematics(chain, qq);
    err << target.position - pose.position, rotation_error_vector(pose.orientation, target.orientation);
  };

  Eigen::Matrix<double, 6, 1> err;
  residual(q, err);
  for (int iter = 0;; ++iter) {
    const double pos_err = err.head<3>().norm();
    const double rot_err = err.tail<3>().norm();
    const double cost = pos_err + rot_err;
    if (cost < best_cost) {
      best_cost = cost;
      best.q = q;
      best.iterations = iter;
      best.position_error = pos_err;
      best.orientation_error = rot_err;
    }
    if (pos_err <= params.tol && rot_err <= params.tol_rot) {
      best.q = q;
      best.iterations = iter;
      best.position_error = pos_err;
      best.orientation_error = rot_err;
      best.converged = true;
      return best;
    }
    if (iter >= params.max_iters) break;

    Jacobian jac = numeric_jacobian(chain, q);
    JointVector dq;
    for (std::size_t pass = 0; pass <= chain.dof(); ++pass) {
      const Eigen::Matrix<double, 6, 6> jjt =
          jac * jac.transpose() + lambda_sq * Eigen::Matrix<double, 6, 6>::Identity();
      dq = jac.transpose() * jjt.ldlt().solve(err);
      bool blocked = false;
      for (std::size_t i = 0; i < chain.dof(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const bool at_min = q[k] <= chain.limits[i].min && dq[k] < 0.0;
        const bool at_max = q[k] >= chain.limits[i].max && dq[k] > 0.0;
        if (at_min || at_max) {
          jac.col(k).setZero();
          blocked = true;
        }
      }
      if (!blocked) break;
    }
    const double norm = dq.norm();
    if (norm > kMaxStepNorm) dq *= kMaxStepNorm / norm;
    const JointVector trial = chain.clamp(q + dq);
    Eigen::Matrix<double, 6, 1> trial_err;
    residual(trial, trial_err);
    if (trial_err.squaredNorm() < err.squaredNorm()) {
      q = trial;
      err = trial_err;
      lambda_sq = std::max(kMinLambdaSq, lambda_sq * 0.25);
    } else {
      lambda_sq = std::min(kMaxLambdaSq, lambda_sq * 4.0);
      if (lambda_sq >= kMaxLambdaSq) {
        lambda_sq = params.lambda * params.lambda;
        q = trial;
        residual(q, err);
      }
    }
  }
  best.converged = false;
  return best;
}

Pose map_workspace(const Pose& master, const WorkspaceMap& map) {
  Pose out;
  out.position = map.slave_origin + map.scale.cwiseProduct(master.position - map.master_origin);
  out.orientation = master.orientation;
  return out;
}

KinematicChain exoskeleton_chain(const std::vector<double>& link_lengths) {
  if (link_lengths.size() != 4) throw InvalidArgument("exoskeleton needs four link lengths");
  constexpr double half_pi = std::numbers::pi / 2.0;
  KinematicChain chain;
  chain.name = "exoskeleton";
  chain.rows = {
      {half_pi, 0.0, 0.0, 0.0},
      {-half_pi, link_lengths[0], 0.0, 0.0},
      {half_pi, link_lengths[1], 0.0, 0.0},
      {0.0, link_lengths[2], 0.0, 0.0},
      {0.0, link_lengths[3], 0.0, 0.0},
  };
  chain.limits = {{-2.0, 2.0}, {-2.0, 2.0}, {-2.0, 2.0}, {-2.4, 2.4}, {-3.1, 3.1}};
  chain.validate();
  return chain;
}

KinematicChain default_slave_chain() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  KinematicChain chain;
  chain.name = "slave7";
  chain.rows = {
      {0.0, 0.0, 0.34, 0.0},
      {-half_pi, 0.0, 0.0, 0.0},
      {half_pi, 0.0, 0.40, 0.0},
      {half_pi, 0.0, 0.0, 0.0},
      {-half_pi, 0.0, 0.40, 0.0},
      {-half_pi, 0.0, 0.0, 0.0},
      {half_pi, 0.0, 0.126, 0.0},
  };
  chain.limits = {{-2.96, 2.96}, {-2.09, 2.09}, {-2.96, 2.96}, {-2.09, 2.09},
                  {-2.96, 2.96}, {-2.09, 2.09}, {-3.05, 3.05}};
  chain.validate();
  return chain;
}

}  // namespace mrtele::kinematics
