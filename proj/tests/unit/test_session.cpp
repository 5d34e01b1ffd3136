#include "fixtures.hpp"

#include "mrtele/session.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>

using namespace mrtele;
using namespace mrtele::session;
using mrtele::testing::bundled;

namespace {

std::string csv_of(const Scenario& sc) { return telemetry_to_string(run_scenario(sc), TelemetryFormat::csv); }

// Time of the first tick with any nonzero coil current, if any.
std::optional<double> first_feedback(const std::vector<TelemetryRecord>& recs) {
  for (const auto& r : recs) {
    for (double i : r.current) {
      if (i > 0.0) return r.t;
    }
  }
  return std::nullopt;
}

Scenario with_delay(Scenario sc, double delay) {
  sc.channel.base_delay = delay;
  return sc;
}

}  // namespace

TEST(Session, OneRecordPerTickEvenlySpaced) {
  Scenario sc = bundled("minimal");
  sc.run.duration = 0.7;
  const auto recs = run_scenario(sc);
  ASSERT_EQ(recs.size(), 350u);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_DOUBLE_EQ(recs[k].t, static_cast<double>(k) / 500.0);
    EXPECT_EQ(recs[k].master_q.size(), 5u);
    EXPECT_EQ(recs[k].slave_q.size(), 7u);
    EXPECT_EQ(recs[k].current.size(), 4u);
  }
}

TEST(Session, SameSeedSameBytes) {
  Scenario sc = bundled("fig5_obstacle");
  sc.run.duration = 3.0;
  sc.run.sensor_noise = 0.05;
  sc.channel.jitter = 0.004;
  sc.channel.drop_probability = 0.1;
  EXPECT_EQ(csv_of(sc), csv_of(sc));
  Scenario other = sc;
  other.run.seed += 1;
  EXPECT_NE(csv_of(sc), csv_of(other));
}

TEST(Session, ObstacleRunHasTwoCollisions) {
  const Scenario sc = bundled("fig5_obstacle");
  const auto recs = run_scenario(sc);
  int events = 0;
  for (const auto& r : recs) events += (r.events & kEventCollision) != 0;
  EXPECT_EQ(events, 2);
  const auto spans = analyze_collisions(sc, recs);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].object_index, 0);
  EXPECT_EQ(spans[1].object_index, 1);
  for (const auto& s : spans) {
    EXPECT_NEAR(recs[s.first_tick].t - s.window_start, kCollisionPadding, 1e-12);
    EXPECT_GE(s.peak_torque, s.rms_torque);
  }
}

TEST(Session, FeedbackWaitsForRoundTrip) {
  const Scenario base = bundled("fig5_obstacle");
  for (double delay : {0.0, 0.02, 0.05}) {
    const Scenario sc = with_delay(base, delay);
    const auto recs = run_scenario(sc);
    // Slave-space target the master commanded at each tick.
    const kinematics::Vec3 m0(recs[0].master_ee[0], recs[0].master_ee[1], recs[0].master_ee[2]);
    std::optional<double> commanded_contact;
    for (const auto& r : recs) {
      const kinematics::Vec3 m(r.master_ee[0], r.master_ee[1], r.master_ee[2]);
      const kinematics::Vec3 target = *sc.map.slave_origin + sc.map.scale.cwiseProduct(m - m0);
      if (env::contact_force(target, kinematics::Vec3::Zero(), sc.objects).state.penetrating) {
        commanded_contact = r.t;
        break;
      }
    }
    const auto fb = first_feedback(recs);
    ASSERT_TRUE(commanded_contact && fb) << delay;
    EXPECT_GE(*fb + 1e-9, *commanded_contact + 2.0 * delay) << delay;
  }
}

TEST(Session, MoreLatencyNeverFeedsBackSooner) {
  const Scenario base = bundled("fig5_obstacle");
  double prev = -1.0;
  for (double delay : {0.0, 0.004, 0.01, 0.03, 0.06, 0.1}) {
    const auto fb = first_feedback(run_scenario(with_delay(base, delay)));
    ASSERT_TRUE(fb) << delay;
    EXPECT_GE(*fb, prev) << delay;
    prev = *fb;
  }
}

TEST(Session, ScriptedRunRefusesMotionCommands) {
  Session s(bundled("fig4_track"));
  OperatorCommand jog{OperatorCommandKind::jog, kinematics::JointVector::Constant(5, 0.01)};
  EXPECT_THROW(s.enqueue(jog), std::invalid_argument);
  EXPECT_NO_THROW(s.enqueue({OperatorCommandKind::demag, {}}));
  EXPECT_TRUE(s.step().events & kEventCommand);
}

TEST(Session, JogValidationAndEffect) {
  Session s(mrtele::testing::free_interactive());
  s.step();
  const auto q0 = s.master_q();
  EXPECT_THROW(s.enqueue({OperatorCommandKind::jog, kinematics::JointVector::Constant(5, 0.2)}),
               std::invalid_argument);
  EXPECT_THROW(s.enqueue({OperatorCommandKind::jog, kinematics::JointVector::Constant(3, 0.01)}),
               std::invalid_argument);
  EXPECT_THROW(s.enqueue({OperatorCommandKind::set_pose, kinematics::JointVector::Constant(5, 9.0)}),
               std::invalid_argument);

  kinematics::JointVector d = kinematics::JointVector::Zero(5);
  d[1] = 0.05;
  s.enqueue({OperatorCommandKind::jog, d});
  const auto& rec = s.step();
  EXPECT_TRUE(rec.events & kEventCommand);
  EXPECT_GT(s.master_q()[1], q0[1]);
  for (int k = 0; k < 100; ++k) s.step();
  EXPECT_NEAR(s.master_q()[1], q0[1] + 0.05, 1e-12);
  EXPECT_FALSE(s.step().events & kEventCommand);
}

TEST(Session, DemagReleasesLockedClutchesWithin250ms) {
  Session s(mrtele::testing::locked_interactive());
  for (int k = 0; k < 100; ++k) s.step();
  double locked = 0.0;
  for (const auto& c : s.clutches()) locked = std::max(locked, c.output_torque);
  ASSERT_GT(locked, 40.0);

  s.enqueue({OperatorCommandKind::demag, {}});
  const double t0 = s.time();
  double lowest = 1e9;
  bool saw_demag = false;
  while (s.time() <= t0 + 0.25 + 1e-9) {
    const auto& r = s.step();
    saw_demag = saw_demag || (r.events & kEventDemag);
    double hi = 0.0;
    for (double tau : r.tau) hi = std::max(hi, tau);
    lowest = std::min(lowest, hi);
  }
  EXPECT_TRUE(saw_demag);
  EXPECT_NEAR(lowest, 0.2, 1e-12);
}

TEST(Session, ClampEventsWhileBuried) {
  const auto recs = run_scenario(mrtele::testing::locked_interactive(0.2));
  bool clamp = false;
  for (const auto& r : recs) {
    clamp = clamp || (r.events & kEventClamp);
    for (double i : r.current) ASSERT_LE(std::abs(i), 1.3);
  }
  EXPECT_TRUE(clamp);
}

TEST(Session, ZeroDelayTrackingWithinAMillimetre) {
  const Scenario sc = bundled("fig4_track");
  const auto recs = run_scenario(sc);
  const kinematics::Vec3 m0(recs[0].master_ee[0], recs[0].master_ee[1], recs[0].master_ee[2]);
  double worst = 0.0;
  for (const auto& r : recs) {
    ASSERT_FALSE(r.events & kEventIkFail);
    const kinematics::Vec3 m(r.master_ee[0], r.master_ee[1], r.master_ee[2]);
    const kinematics::Vec3 target = *sc.map.slave_origin + (m - m0);
    for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(target[a] - r.slave_ee[a]));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Calibration, HitsReachableTarget) {
  Scenario sc = bundled("fig6_low");
  const double before = sc.objects[0].stiffness;
  const auto report = calibrate_environment(sc, {{0, 2.0}}, 0.02, 40);
  ASSERT_EQ(report.achieved.size(), 1u);
  EXPECT_NEAR(report.achieved[0], 2.0, 0.02 * 2.0);
  EXPECT_LT(sc.objects[0].stiffness, before);
  EXPECT_LE(report.runs, 40);
}
