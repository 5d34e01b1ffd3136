#include "mrtele/clutch.hpp"

#include "mrtele/errors.hpp"

#include <json.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace mrtele::clutch {

void HillParams::validate() const {
  if (!(v_max > 0.0) || !(k > 0.0) || !(n > 0.0) || !std::isfinite(v_max) || !std::isfinite(k) ||
      !std::isfinite(n)) {
    throw InvalidArgument("Hill parameters must be finite and > 0");
  }
}

void ClutchSpec::validate() const {
  if (!(idle_torque >= 0.0) || !(idle_torque < max_torque)) {
    throw InvalidArgument("clutch needs 0 <= idle_torque < max_torque");
  }
  if (!(saturation_current > 0.0)) throw InvalidArgument("saturation_current must be > 0");
  if (!(mass > 0.0) || !(volume > 0.0) || !(dissipated_power > 0.0)) {
    throw InvalidArgument("mass, volume and dissipated_power must be > 0");
  }
}

void DemagParams::validate() const {
  if (!(frequency > 0.0) || !(envelope_tau > 0.0) || !(duration > 0.0)) {
    throw InvalidArgument("demag parameters must be > 0");
  }
  if (duration < 3.0 * envelope_tau) {
    throw InvalidArgument("demag duration must cover at least 3 envelope time constants");
  }
}

void ClutchDynamics::validate() const {
  if (!(tau_rise > 0.0) || !(tau_fall > 0.0) || !(tau_demag > 0.0)) {
    throw InvalidArgument("clutch time constants must be > 0");
  }
  demag.validate();
}

const char* to_string(ClutchMode mode) {
  switch (mode) {
    case ClutchMode::idle: return "idle";
    case ClutchMode::excite: return "excite";
    case ClutchMode::demag: return "demag";
  }
  return "idle";
}

double hill_torque(const HillParams& params, double current) {
  if (!(current >= 0.0)) throw InvalidArgument("hill_torque: current must be >= 0");
  if (current == 0.0) return 0.0;
  if (std::isinf(current)) return params.v_max;
  // (x/k)^n form stays finite for large x where x^n alone would overflow.
  const double r = std::pow(current / params.k, params.n);
  if (std::isinf(r)) return params.v_max;
  return params.v_max * r / (1.0 + r);
}

double inverse_hill(const HillParams& params, double torque) {
  if (!(torque >= 0.0)) throw InvalidArgument("inverse_hill: torque must be >= 0");
  if (torque >= params.v_max) {
    throw SaturationError("inverse_hill: torque " + std::to_string(torque) +
                          " N·m is at or above v_max");
  }
  if (torque == 0.0) return 0.0;
  return params.k * std::pow(torque / (params.v_max - torque), 1.0 / params.n);
}

double normalized_rmse(double rmse, double torque_min, double torque_max) {
  const double range = torque_max - torque_min;
  if (!(range > 0.0)) throw InvalidArgument("normalized_rmse: torque range must be > 0");
  return rmse / range;
}

namespace {

// Residuals in log-parameter space so every iterate keeps v_max, k, n > 0.
struct HillResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<Sample>* samples;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(samples->size()); }

  static HillParams unpack(const Eigen::VectorXd& x) {
    return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2])};
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    const HillParams p = unpack(x);
    for (std::size_t i = 0; i < samples->size(); ++i) {
      const auto& s = (*samples)[i];
      fvec[static_cast<Eigen::Index>(i)] = hill_torque(p, s.current) - s.torque;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    const HillParams p = unpack(x);
    for (std::size_t i = 0; i < samples->size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double xi = (*samples)[i].current;
      if (xi <= 0.0) {
        fjac.row(row).setZero();
        continue;
      }
      const double ratio = xi / p.k;
      const double r = std::pow(ratio, p.n);
      const double f = p.v_max * r / (1.0 + r);
      const double df_dr = p.v_max / ((1.0 + r) * (1.0 + r));
      fjac(row, 0) = f;
      fjac(row, 1) = df_dr * (-p.n * r);
      fjac(row, 2) = df_dr * r * std::log(ratio) * p.n;
    }
    return 0;
  }
};

double sse(const HillParams& p, const std::vector<Sample>& samples) {
  double acc = 0.0;
  for (const auto& s : samples) {
    const double e = hill_torque(p, s.current) - s.torque;
    acc += e * e;
  }
  return acc;
}

}  // namespace

FitResult fit_hill(const std::vector<Sample>& samples) {
  if (samples.size() < 4) throw FitFailure("fit_hill needs at least 4 samples");
  std::set<double> distinct;
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!(s.current >= 0.0) || !std::isfinite(s.current) || !std::isfinite(s.torque)) {
      throw InvalidArgument("fit_hill: currents must be finite and >= 0, torques finite");
    }
    distinct.insert(s.current);
    t_min = std::min(t_min, s.torque);
    t_max = std::max(t_max, s.torque);
  }
  if (distinct.size() < 3) throw FitFailure("fit_hill needs at least 3 distinct currents");
  if (!(t_max > t_min)) throw FitFailure("fit_hill: torques are all equal");
  if (!(t_max > 0.0)) throw FitFailure("fit_hill: no positive torque in samples");

  HillResidual functor{&samples};
  HillParams best;
  double best_sse = std::numeric_limits<double>::infinity();

  for (double n0 : {1.0, 2.0, 3.0}) {
    for (double k0 : {0.3, 0.6, 1.0}) {
      Eigen::VectorXd x(3);
      x << std::log(1.2 * t_max), std::log(k0), std::log(n0);
      Eigen::LevenbergMarquardt<HillResidual> lm(functor);
      lm.parameters.xtol = 1e-15;
      lm.parameters.ftol = 1e-15;
      lm.parameters.maxfev = 4000;
      lm.minimize(x);
      if (!x.allFinite()) continue;
      const HillParams candidate = HillResidual::unpack(x);
      if (!std::isfinite(candidate.v_max) || !std::isfinite(candidate.k) ||
          !std::isfinite(candidate.n)) {
        continue;
      }
      const double cost = sse(candidate, samples);
      if (cost < best_sse) {
        best_sse = cost;
        best = candidate;
      }
    }
  }
  if (!std::isfinite(best_sse)) throw FitFailure("fit_hill: no start converged to a finite model");

  FitResult out;
  out.params = best;
  double abs_sum = 0.0;
  for (const auto& s : samples) abs_sum += std::abs(hill_torque(best, s.current) - s.torque);
  const auto count = static_cast<double>(samples.size());
  out.mae = abs_sum / count;
  out.rmse = std::sqrt(best_sse / count);
  out.nrmse = normalized_rmse(out.rmse, t_min, t_max);
  return out;
}

double output_torque(const HillParams& params, const ClutchSpec& spec, double magnetization) {
  return std::max(spec.idle_torque, hill_torque(params, std::max(0.0, magnetization)));
}

ClutchState step_magnetization(const ClutchState& state, double command, double dt,
                               const HillParams& params, const ClutchSpec& spec,
                               const ClutchDynamics& dynamics) {
  if (!(dt >= 0.0)) throw InvalidArgument("step_magnetization: dt must be >= 0");
  if (!(command >= 0.0) || command > spec.saturation_current + 1e-12) {
    throw InvalidArgument("step_magnetization: command outside [0, saturation_current]");
  }
  if (dt == 0.0) return state;

  ClutchState next = state;
  next.commanded_current = command;

  if (state.mode == ClutchMode::demag) {
    next.magnetization = state.magnetization * std::exp(-dt / dynamics.tau_demag);
    next.demag_elapsed = state.demag_elapsed + dt;
    if (next.demag_elapsed >= dynamics.demag.duration) {
      next.mode = ClutchMode::idle;
      next.demag_elapsed = 0.0;
      next.demag_amplitude = 0.0;
    }
  } else {
    const double tau = command > state.magnetization ? dynamics.tau_rise : dynamics.tau_fall;
    // Exact zero-order-hold solution of dm/dt = (command - m) / tau.
    next.magnetization =
        command + (state.magnetization - command) * std::exp(-dt / tau);
    next.mode = command > 0.0 ? ClutchMode::excite : ClutchMode::idle;
  }
  next.magnetization = std::clamp(next.magnetization, 0.0, spec.saturation_current);
  next.output_torque = output_torque(params, spec, next.magnetization);
  return next;
}

ClutchState begin_demag(const ClutchState& state) {
  ClutchState next = state;
  next.mode = ClutchMode::demag;
  next.demag_elapsed = 0.0;
  next.demag_amplitude = state.magnetization;
  return next;
}

double demag_waveform(double i0, double t, const DemagParams& params) {
  if (t < 0.0 || t > params.duration) return 0.0;
  return i0 * std::exp(-t / params.envelope_tau) *
         std::sin(2.0 * std::numbers::pi * params.frequency * t);
}

double coil_current(const ClutchState& state, const DemagParams& params) {
  if (state.mode == ClutchMode::demag) {
    return demag_waveform(state.demag_amplitude, state.demag_elapsed, params);
  }
  return state.commanded_current;
}

PerformanceMetrics performance_metrics(const ClutchSpec& spec) {
  if (!(spec.mass > 0.0) || !(spec.volume > 0.0) || !(spec.dissipated_power > 0.0)) {
    throw InvalidArgument("performance_metrics: mass, volume and power must be > 0");
  }
  return {spec.max_torque / spec.mass, spec.max_torque / spec.volume,
          spec.max_torque / spec.dissipated_power};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw ParseError(line, "not a number: '" + text + "'");
  return v;
}

}  // namespace

std::vector<Sample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Sample> out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      if (t != "current_a,torque_nm") {
        throw ParseError(line_no, "expected header 'current_a,torque_nm'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw ParseError(line_no, "expected two comma-separated fields");
    }
    out.push_back({parse_double(trim(t.substr(0, comma)), line_no),
                   parse_double(trim(t.substr(comma + 1)), line_no)});
  }
  if (!header_seen) throw ParseError(line_no, "empty file");
  return out;
}

std::string fit_result_to_json(const FitResult& fit, int indent) {
  nlohmann::ordered_json j;
  j["v_max_nm"] = fit.params.v_max;
  j["k_a"] = fit.params.k;
  j["n"] = fit.params.n;
  j["mae_nm"] = fit.mae;
  j["rmse_nm"] = fit.rmse;
  j["nrmse"] = fit.nrmse;
  return j.dump(indent);
}

}  // namespace mrtele::clutch
