#include "fixtures.hpp"

#include "mrtele/bridge/protocol.hpp"
#include "mrtele/session.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

using namespace mrtele;
using namespace mrtele::bridge;

namespace {

StateMessage sample_state(std::uint64_t ticks) {
  session::Session s(mrtele::testing::locked_interactive(0.5));
  for (std::uint64_t k = 0; k < ticks; ++k) s.step();
  return make_state(ticks == 0 ? 0 : ticks - 1, "locked", true, false, s.last_record(), s.clutches(),
                    s.last_commands());
}

}  // namespace

TEST(State, ZeroTickMessageCarriesEveryField) {
  const auto text = encode_state(sample_state(1));
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("type"), "state");
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("tick"), 0);
  EXPECT_EQ(j.at("master_q").size(), 5u);
  EXPECT_EQ(j.at("slave_q").size(), 7u);
  EXPECT_EQ(j.at("clutch_modes").size(), 4u);
  EXPECT_EQ(j.at("clamped").size(), 4u);
  for (const char* key : {"t", "master_ee", "slave_ee", "force", "current", "tau", "semg", "events", "scenario",
                          "interactive", "paused"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(State, RoundTripIsLossless) {
  for (std::uint64_t n : {1u, 7u, 60u}) {
    const StateMessage m = sample_state(n);
    EXPECT_EQ(decode_state(encode_state(m)), m);
  }
}

TEST(State, SevenJointFrameUnderTwoKilobytes) {
  const auto text = encode_state(sample_state(60));
  EXPECT_LT(text.size(), 2048u) << text.size();
}

TEST(State, DecodeRejectsGarbageAndWrongVersion) {
  EXPECT_THROW(decode_state("not json"), ProtocolError);
  auto j = nlohmann::json::parse(encode_state(sample_state(1)));
  j["schema_version"] = 99;
  EXPECT_THROW(decode_state(j.dump()), ProtocolError);
}

TEST(Command, ParsesEveryKind) {
  auto c = parse_command(R"({"type":"command","id":"1","kind":"jog","deltas_rad":[0.01,0,0,0,-0.02]})");
  EXPECT_EQ(c.kind, CommandKind::jog);
  EXPECT_EQ(c.values.size(), 5u);
  c = parse_command(R"({"type":"command","id":"2","kind":"set_pose","q_rad":[0,0,0,1,0]})");
  EXPECT_EQ(c.kind, CommandKind::set_pose);
  c = parse_command(R"({"type":"command","kind":"select_scenario","scenario":"fig6_low"})");
  EXPECT_EQ(c.scenario, "fig6_low");
  EXPECT_EQ(c.id, "");
  for (const char* k : {"demag", "pause", "resume", "reset"}) {
    EXPECT_EQ(to_string(parse_command(std::string(R"({"type":"command","kind":")") + k + "\"}").kind), std::string(k));
  }
}

TEST(Command, EncodeParseRoundTrip) {
  CommandMessage c;
  c.id = "abc";
  c.kind = CommandKind::jog;
  c.values = {0.1, -0.05, 0.0, 1.0 / 3.0, 0.0};
  EXPECT_EQ(parse_command(encode_command(c)), c);
}

TEST(Command, RejectsMalformedInput) {
  for (const char* bad : {
           "{",
           R"({"type":"command","kind":"teleport"})",
           R"({"type":"state","kind":"pause"})",
           R"({"type":"command"})",
           R"({"type":"command","kind":"jog"})",
           R"({"type":"command","kind":"jog","deltas_rad":["a"]})",
           R"({"type":"command","kind":"select_scenario"})",
       }) {
    EXPECT_THROW(parse_command(bad), ProtocolError) << bad;
  }
}

TEST(Reply, AckAndRejectRoundTrip) {
  const Reply ack = make_ack("7", "jog", 42);
  const auto aj = nlohmann::json::parse(encode_reply(ack));
  EXPECT_EQ(aj.at("type"), "ack");
  EXPECT_EQ(aj.at("effect_tick"), 42);
  EXPECT_EQ(decode_reply(encode_reply(ack)), ack);

  const Reply rej = make_reject("8", "nope");
  EXPECT_EQ(nlohmann::json::parse(encode_reply(rej)).at("type"), "reject");
  EXPECT_EQ(decode_reply(encode_reply(rej)), rej);
}

TEST(Health, Encoding) {
  const auto j = nlohmann::json::parse(encode_health({"fig5_obstacle", 12, true, 2}));
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("scenario"), "fig5_obstacle");
  EXPECT_EQ(j.at("tick"), 12);
  EXPECT_EQ(j.at("paused"), true);
  EXPECT_EQ(j.at("subscribers"), 2);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
}
