#include "mrtele/clutch.hpp"
#include "mrtele/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace mrtele;
using namespace mrtele::clutch;

namespace {

double oracle_hill(double v, double k, double n, double x) {
  return v * std::pow(x, n) / (std::pow(k, n) + std::pow(x, n));
}

std::vector<Sample> synthetic(const HillParams& p, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Sample> out;
  for (int i = 1; i <= 13; ++i) {
    const double x = 0.1 * i;
    out.push_back({x, oracle_hill(p.v_max, p.k, p.n, x) + (sigma > 0.0 ? noise(rng) : 0.0)});
  }
  return out;
}

// Steps a single clutch with a constant command until `done` holds; returns elapsed time.
template <typename Pred>
double time_until(ClutchState s, double command, double dt, Pred done) {
  const HillParams p;
  const ClutchSpec spec;
  const ClutchDynamics dyn;
  double t = 0.0;
  while (!done(s) && t < 10.0) {
    s = step_magnetization(s, command, dt, p, spec, dyn);
    t += dt;
  }
  return t;
}

}  // namespace

TEST(Hill, ReferenceIdentities) {
  const HillParams p;
  EXPECT_EQ(hill_torque(p, 0.0), 0.0);
  EXPECT_NEAR(hill_torque(p, 0.66), 27.14, 1e-12);
  EXPECT_NEAR(hill_torque(p, 1.3), oracle_hill(54.28, 0.66, 1.96, 1.3), 1e-12);
  EXPECT_NEAR(hill_torque(p, 1.3), 42.92, 0.01);
}

TEST(Hill, StrictlyIncreasingAndBelowAsymptote) {
  const HillParams p;
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double f = hill_torque(p, 0.005 * i);
    EXPECT_GT(f, prev);
    EXPECT_LT(f, p.v_max);
    prev = f;
  }
  EXPECT_LE(hill_torque(p, 1e300), p.v_max);
}

TEST(Hill, InverseRoundTrip) {
  const HillParams p;
  for (int i = 0; i < 1000; ++i) {
    const double f = 0.999 * p.v_max * i / 999.0;
    EXPECT_LT(std::abs(hill_torque(p, inverse_hill(p, f)) - f), 1e-9) << f;
  }
  EXPECT_NEAR(inverse_hill(p, 5.0), 0.66 * std::pow(5.0 / (54.28 - 5.0), 1.0 / 1.96), 1e-15);
}

TEST(Hill, DomainErrors) {
  const HillParams p;
  EXPECT_THROW(hill_torque(p, -0.1), std::invalid_argument);
  EXPECT_THROW(inverse_hill(p, -1.0), std::invalid_argument);
  EXPECT_THROW(inverse_hill(p, p.v_max), SaturationError);
  EXPECT_THROW(inverse_hill(p, 60.0), SaturationError);
  EXPECT_THROW((HillParams{0.0, 0.66, 1.96}.validate()), std::invalid_argument);
}

TEST(Hill, SaturationTorqueWithinFitBand) {
  const double gap = hill_torque(HillParams{}, 1.3) - 42.12;
  EXPECT_LT(std::abs(gap), 2.0 * 1.05);
}

TEST(Metrics, ReferenceClutchRatios) {
  const auto m = performance_metrics(ClutchSpec{});
  EXPECT_NEAR(m.tmr, 93.6, 0.1);
  EXPECT_NEAR(m.tvr, 4.05e5, 4.05e5 * 0.005);
  EXPECT_NEAR(m.tpr, 4.15, 0.01);

  ClutchSpec bad;
  bad.mass = 0.0;
  EXPECT_THROW(performance_metrics(bad), std::invalid_argument);
}

TEST(Metrics, NormalizedRmse) {
  EXPECT_NEAR(normalized_rmse(1.05, 0.2, 42.12), 0.025, 0.001);
  EXPECT_THROW(normalized_rmse(1.0, 3.0, 3.0), std::invalid_argument);
}

TEST(Fit, RecoversNoiseFreeParameters) {
  const HillParams truth;
  const FitResult r = fit_hill(synthetic(truth, 0.0, 0));
  EXPECT_NEAR(r.params.v_max / truth.v_max, 1.0, 1e-6);
  EXPECT_NEAR(r.params.k / truth.k, 1.0, 1e-6);
  EXPECT_NEAR(r.params.n / truth.n, 1.0, 1e-6);
  EXPECT_LT(r.rmse, 1e-6);
}

TEST(Fit, NoisyMetricsAreConsistent) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FitResult r = fit_hill(synthetic(HillParams{}, 1.0, seed));
    EXPECT_LE(r.mae, r.rmse + 1e-15);
    EXPECT_GE(r.nrmse, 0.0);
    EXPECT_LE(r.nrmse, 1.0);
  }
}

TEST(Fit, DegenerateInputsFail) {
  EXPECT_THROW(fit_hill({{0.1, 1}, {0.2, 2}, {0.3, 3}}), FitFailure);
  EXPECT_THROW(fit_hill({{0.1, 1}, {0.1, 2}, {0.2, 3}, {0.2, 4}}), FitFailure);
  EXPECT_THROW(fit_hill({{0.1, 5}, {0.2, 5}, {0.3, 5}, {0.4, 5}}), FitFailure);
}

TEST(Fit, ReadsSampleCsvAndReportsBadLines) {
  const auto dir = std::filesystem::temp_directory_path() / "mrtele_clutch_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "good.csv") << "current_a,torque_nm\n0.1,1.0\n0.2, 2.5\n";
    std::ofstream(dir / "bad.csv") << "current_a,torque_nm\n0.1,1.0\n0.2,abc\n";
  }
  const auto samples = read_samples_csv((dir / "good.csv").string());
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[1].torque, 2.5);
  try {
    read_samples_csv((dir / "bad.csv").string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(read_samples_csv((dir / "missing.csv").string()), IoError);
}

TEST(Dynamics, RiseMatchesClosedFormLag) {
  const HillParams p;
  const ClutchSpec spec;
  const ClutchDynamics dyn;
  const double dt = 0.002;
  ClutchState s;
  for (int k = 1; k <= 50; ++k) {
    s = step_magnetization(s, 1.3, dt, p, spec, dyn);
    EXPECT_NEAR(s.magnetization, 1.3 * (1.0 - std::exp(-k * dt / dyn.tau_rise)), 1e-12);
    EXPECT_EQ(s.mode, ClutchMode::excite);
  }
}

TEST(Dynamics, FallMatchesClosedFormDecay) {
  const HillParams p;
  const ClutchSpec spec;
  const ClutchDynamics dyn;
  ClutchState s;
  s.magnetization = 1.3;
  for (int k = 1; k <= 100; ++k) {
    s = step_magnetization(s, 0.0, 0.002, p, spec, dyn);
    EXPECT_NEAR(s.magnetization, 1.3 * std::exp(-k * 0.002 / dyn.tau_fall), 1e-12);
    EXPECT_EQ(s.mode, ClutchMode::idle);
  }
}

TEST(Dynamics, RiseFasterThanFall) {
  ClutchState empty, full;
  full.magnetization = 1.3;
  const double rise = time_until(empty, 1.3, 1e-4, [](const ClutchState& s) { return s.magnetization >= 0.9 * 1.3; });
  const double fall = time_until(full, 0.0, 1e-4, [](const ClutchState& s) { return s.magnetization <= 0.1 * 1.3; });
  EXPECT_LT(rise, fall);
}

TEST(Dynamics, StateInvariantsUnderRandomCommands) {
  const HillParams p;
  const ClutchSpec spec;
  const ClutchDynamics dyn;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> cmd(0.0, spec.saturation_current);
  std::bernoulli_distribution demag(0.01);
  ClutchState s;
  for (int k = 0; k < 20000; ++k) {
    if (demag(rng)) s = begin_demag(s);
    s = step_magnetization(s, cmd(rng), 0.002, p, spec, dyn);
    ASSERT_GE(s.magnetization, 0.0);
    ASSERT_LE(s.magnetization, spec.saturation_current);
    ASSERT_GE(s.output_torque, spec.idle_torque);
    if (s.mode == ClutchMode::excite) {
      ASSERT_LE(s.commanded_current, spec.saturation_current);
    }
  }
}

TEST(Dynamics, RejectsOutOfRangeCommands) {
  const ClutchState s;
  EXPECT_THROW(step_magnetization(s, 1.5, 0.002, {}, {}, {}), std::invalid_argument);
  EXPECT_THROW(step_magnetization(s, -0.1, 0.002, {}, {}, {}), std::invalid_argument);
  EXPECT_THROW(step_magnetization(s, 0.5, -1.0, {}, {}, {}), std::invalid_argument);
}

TEST(Demag, ReachesIdleWithinDurationAndBeatsPassiveDecay) {
  const ClutchSpec spec;
  const ClutchDynamics dyn;
  ClutchState s;
  s.magnetization = 1.3;
  s.output_torque = output_torque({}, spec, 1.3);

  const double dt = 0.002;
  ClutchState d = begin_demag(s);
  double t = 0.0;
  while (d.mode == ClutchMode::demag) {
    d = step_magnetization(d, 0.0, dt, {}, spec, dyn);
    t += dt;
  }
  EXPECT_LE(t, dyn.demag.duration + 1e-9);
  EXPECT_LT(d.magnetization, 0.01);
  EXPECT_NEAR(d.magnetization, 1.3 * std::exp(-t / dyn.tau_demag), 1e-12);
  EXPECT_EQ(d.output_torque, spec.idle_torque);

  auto below = [](const ClutchState& c) { return c.magnetization < 0.01; };
  const double fast = time_until(begin_demag(s), 0.0, 1e-4, below);
  const double slow = time_until(s, 0.0, 1e-4, below);
  EXPECT_NEAR(fast, dyn.tau_demag * std::log(130.0), 2e-4);
  EXPECT_NEAR(slow, dyn.tau_fall * std::log(130.0), 2e-4);
  EXPECT_LT(fast, slow);
}

TEST(Demag, FromZeroIsANoOpAndRepeatsAreIdempotent) {
  ClutchState zero;
  zero.output_torque = 0.2;
  ClutchState d = begin_demag(zero);
  for (int k = 0; k < 200; ++k) d = step_magnetization(d, 0.0, 0.002, {}, {}, {});
  EXPECT_EQ(d.magnetization, 0.0);
  EXPECT_EQ(d.output_torque, 0.2);

  ClutchState full;
  full.magnetization = 1.3;
  ClutchState once = begin_demag(full), twice = begin_demag(begin_demag(full));
  for (int k = 0; k < 200; ++k) {
    once = step_magnetization(once, 0.0, 0.002, {}, {}, {});
    twice = step_magnetization(twice, 0.0, 0.002, {}, {}, {});
  }
  EXPECT_EQ(once.magnetization, twice.magnetization);
}

TEST(Demag, WaveformOnDenseGrid) {
  const DemagParams p;
  const double i0 = 1.3;
  int crossings = 0;
  double prev = demag_waveform(i0, 1e-7, p);
  for (int k = 1; k <= 250000; ++k) {
    const double t = k * 1e-6;
    const double w = demag_waveform(i0, t, p);
    const double envelope = i0 * std::exp(-t / p.envelope_tau);
    ASSERT_LE(std::abs(w), envelope + 1e-15);
    ASSERT_NEAR(w, envelope * std::sin(2.0 * std::numbers::pi * p.frequency * t), 1e-12);
    if ((w > 0) != (prev > 0) && std::abs(w) > 1e-12) ++crossings;
    if (std::abs(w) > 1e-12) prev = w;
  }
  // Sign flips twice per cycle.
  EXPECT_NEAR(crossings, 2.0 * p.frequency * p.duration, 1.0);
  EXPECT_EQ(demag_waveform(i0, p.duration + 1e-6, p), 0.0);
  EXPECT_EQ(demag_waveform(i0, -1e-6, p), 0.0);
}

TEST(Demag, ParameterValidation) {
  DemagParams p;
  p.duration = 2.0 * p.envelope_tau;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  ClutchDynamics d;
  d.tau_fall = 0.0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}
