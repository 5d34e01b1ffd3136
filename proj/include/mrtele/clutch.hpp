#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mrtele::clutch {

/// Locking torque vs. excitation current: f(x) = v_max * x^n / (k^n + x^n).
struct HillParams {
  double v_max = 54.28;  // N·m
  double k = 0.66;       // A, half-saturation current
  double n = 1.96;

  void validate() const;
};

/// Physical ratings of one clutch.
struct ClutchSpec {
  double idle_torque = 0.2;          // N·m at zero current
  double saturation_current = 1.3;   // A
  double max_torque = 42.12;         // N·m measured at saturation
  double mass = 0.45;                // kg
  double volume = 10.4e-5;           // m^3
  double dissipated_power = 10.14;   // W

  void validate() const;
};

enum class ClutchMode { idle, excite, demag };

const char* to_string(ClutchMode mode);

/// Evolving state. `magnetization` is the equivalent current of the retained field.
struct ClutchState {
  double commanded_current = 0.0;  // A
  double magnetization = 0.0;      // A
  double output_torque = 0.0;      // N·m
  ClutchMode mode = ClutchMode::idle;
  double demag_elapsed = 0.0;      // s
  double demag_amplitude = 0.0;    // A, waveform i0 latched when demag starts
};

struct DemagParams {
  double frequency = 100.0;     // Hz
  double envelope_tau = 0.05;   // s
  double duration = 0.25;       // s

  void validate() const;
};

/// First-order lag constants for the retained field.
struct ClutchDynamics {
  double tau_rise = 0.010;   // s
  double tau_fall = 0.300;   // s
  double tau_demag = 0.020;  // s
  DemagParams demag;

  void validate() const;
};

struct FitResult {
  HillParams params;
  double mae = 0.0;    // N·m
  double rmse = 0.0;   // N·m
  double nrmse = 0.0;  // fraction of observed torque range
};

struct Sample {
  double current = 0.0;  // A
  double torque = 0.0;   // N·m
};

struct PerformanceMetrics {
  double tmr = 0.0;  // N·m/kg
  double tvr = 0.0;  // N·m/m^3
  double tpr = 0.0;  // N·m/W
};

double hill_torque(const HillParams& params, double current);

/// Closed-form inverse of hill_torque on [0, v_max).
/// Throws SaturationError for torque >= v_max; callers clamp first.
double inverse_hill(const HillParams& params, double torque);

/// Nonlinear least squares from a grid of starting points; keeps the lowest-SSE solution.
FitResult fit_hill(const std::vector<Sample>& samples);

/// rmse / range, the normalisation used for the fit report.
double normalized_rmse(double rmse, double torque_min, double torque_max);

/// Torque actually transmitted for a given state: never below the idle drag.
double output_torque(const HillParams& params, const ClutchSpec& spec, double magnetization);

ClutchState step_magnetization(const ClutchState& state, double command, double dt,
                               const HillParams& params, const ClutchSpec& spec,
                               const ClutchDynamics& dynamics);

/// Put a clutch in demag mode, latching its present magnetization as the waveform amplitude.
ClutchState begin_demag(const ClutchState& state);

/// Signed coil current of the decaying sinusoid, zero after `params.duration`.
double demag_waveform(double i0, double t, const DemagParams& params);

/// Current actually driven through the coil for a state (signed during demag).
double coil_current(const ClutchState& state, const DemagParams& params);

PerformanceMetrics performance_metrics(const ClutchSpec& spec);

/// Reads `current_a,torque_nm` CSV. Throws ParseError with the offending line.
std::vector<Sample> read_samples_csv(const std::string& path);

std::string fit_result_to_json(const FitResult& fit, int indent = 2);

}  // namespace mrtele::clutch
