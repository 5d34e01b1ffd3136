#include "mrtele/bridge/protocol.hpp"

#include <json.hpp>

namespace mrtele::bridge {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::pair<CommandKind, const char*> kKinds[] = {
    {CommandKind::jog, "jog"},
    {CommandKind::set_pose, "set_pose"},
    {CommandKind::demag, "demag"},
    {CommandKind::select_scenario, "select_scenario"},
    {CommandKind::pause, "pause"},
    {CommandKind::resume, "resume"},
    {CommandKind::reset, "reset"},
};

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  return j;
}

std::vector<double> angles(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError(std::string("missing '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) throw ProtocolError(std::string("'") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ProtocolError(std::string("'") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

const char* to_string(CommandKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

StateMessage make_state(std::uint64_t tick, const std::string& scenario, bool interactive, bool paused,
                        const session::TelemetryRecord& record,
                        const std::vector<clutch::ClutchState>& clutches,
                        const std::vector<feedback::JointCommand>& commands) {
  StateMessage m;
  m.tick = tick;
  m.scenario = scenario;
  m.interactive = interactive;
  m.paused = paused;
  m.record = record;
  for (const auto& c : clutches) m.clutch_modes.emplace_back(clutch::to_string(c.mode));
  for (const auto& c : commands) m.clamped.push_back(c.clamped);
  return m;
}

std::string encode_state(const StateMessage& m) {
  ordered_json j;
  j["type"] = "state";
  j["schema_version"] = m.schema_version;
  j["tick"] = m.tick;
  j["scenario"] = m.scenario;
  j["interactive"] = m.interactive;
  j["paused"] = m.paused;
  const auto& r = m.record;
  j["t"] = r.t;
  j["master_q"] = r.master_q;
  j["slave_q"] = r.slave_q;
  j["master_ee"] = r.master_ee;
  j["slave_ee"] = r.slave_ee;
  j["force"] = r.force;
  j["current"] = r.current;
  j["tau"] = r.tau;
  j["semg"] = r.semg;
  j["events"] = session::events_to_string(r.events);
  j["clutch_modes"] = m.clutch_modes;
  j["clamped"] = m.clamped;
  return j.dump();
}

StateMessage decode_state(const std::string& text) {
  const json j = parse_object(text);
  try {
    if (j.at("type").get<std::string>() != "state") throw ProtocolError("not a state message");
    StateMessage m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion) {
      throw ProtocolError("unsupported schema_version " + std::to_string(m.schema_version));
    }
    m.tick = j.at("tick").get<std::uint64_t>();
    m.scenario = j.at("scenario").get<std::string>();
    m.interactive = j.at("interactive").get<bool>();
    m.paused = j.at("paused").get<bool>();
    auto& r = m.record;
    r.t = j.at("t").get<double>();
    r.master_q = j.at("master_q").get<std::vector<double>>();
    r.slave_q = j.at("slave_q").get<std::vector<double>>();
    r.master_ee = j.at("master_ee").get<session::Vec3d>();
    r.slave_ee = j.at("slave_ee").get<session::Vec3d>();
    r.force = j.at("force").get<session::Vec3d>();
    r.current = j.at("current").get<std::vector<double>>();
    r.tau = j.at("tau").get<std::vector<double>>();
    r.semg = j.at("semg").get<double>();
    r.events = session::events_from_string(j.at("events").get<std::string>());
    m.clutch_modes = j.at("clutch_modes").get<std::vector<std::string>>();
    m.clamped = j.at("clamped").get<std::vector<bool>>();
    return m;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad state message: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("bad state message: ") + e.what());
  }
}

CommandMessage parse_command(const std::string& text) {
  const json j = parse_object(text);
  CommandMessage c;
  if (j.contains("id")) {
    const auto& id = j.at("id");
    if (id.is_string()) {
      c.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      c.id = std::to_string(id.get<std::int64_t>());
    } else {
      throw ProtocolError("'id' must be a string or integer");
    }
  }
  if (j.contains("type") && j.at("type") != "command") throw ProtocolError("'type' must be \"command\"");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ProtocolError("missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  bool known = false;
  for (const auto& [k, name] : kKinds) {
    if (kind == name) {
      c.kind = k;
      known = true;
    }
  }
  if (!known) throw ProtocolError("unknown command kind '" + kind + "'");

  switch (c.kind) {
    case CommandKind::jog:
      c.values = angles(j, "deltas_rad");
      break;
    case CommandKind::set_pose:
      c.values = angles(j, "q_rad");
      break;
    case CommandKind::select_scenario:
      if (!j.contains("scenario") || !j.at("scenario").is_string() ||
          j.at("scenario").get<std::string>().empty()) {
        throw ProtocolError("select_scenario needs a 'scenario' name");
      }
      c.scenario = j.at("scenario").get<std::string>();
      break;
    default:
      break;
  }
  return c;
}

std::string encode_command(const CommandMessage& c) {
  ordered_json j;
  j["type"] = "command";
  if (!c.id.empty()) j["id"] = c.id;
  j["kind"] = to_string(c.kind);
  if (c.kind == CommandKind::jog) j["deltas_rad"] = c.values;
  if (c.kind == CommandKind::set_pose) j["q_rad"] = c.values;
  if (c.kind == CommandKind::select_scenario) j["scenario"] = c.scenario;
  return j.dump();
}

Reply make_ack(const std::string& id, const std::string& kind, std::uint64_t effect_tick) {
  Reply r;
  r.id = id;
  r.accepted = true;
  r.kind = kind;
  r.effect_tick = effect_tick;
  return r;
}

Reply make_reject(const std::string& id, const std::string& reason) {
  Reply r;
  r.id = id;
  r.accepted = false;
  r.reason = reason;
  return r;
}

std::string encode_reply(const Reply& r) {
  ordered_json j;
  j["type"] = r.accepted ? "ack" : "reject";
  j["id"] = r.id;
  if (r.accepted) {
    j["kind"] = r.kind;
    j["effect_tick"] = r.effect_tick;
  } else {
    j["reason"] = r.reason;
  }
  return j.dump();
}

Reply decode_reply(const std::string& text) {
  const json j = parse_object(text);
  try {
    Reply r;
    const std::string type = j.at("type").get<std::string>();
    if (type != "ack" && type != "reject") throw ProtocolError("not a reply");
    r.accepted = type == "ack";
    r.id = j.at("id").get<std::string>();
    if (r.accepted) {
      r.kind = j.at("kind").get<std::string>();
      r.effect_tick = j.at("effect_tick").get<std::uint64_t>();
    } else {
      r.reason = j.at("reason").get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad reply: ") + e.what());
  }
}

std::string encode_health(const Health& h) {
  ordered_json j;
  j["status"] = "ok";
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = h.scenario;
  j["tick"] = h.tick;
  j["paused"] = h.paused;
  j["subscribers"] = h.subscribers;
  return j.dump();
}

}  // namespace mrtele::bridge
