#pragma once

#include "mrtele/clutch.hpp"
#include "mrtele/feedback.hpp"
#include "mrtele/telemetry.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrtele::bridge {

inline constexpr int kSchemaVersion = 1;

/// Malformed or unacceptable client message; the text becomes the rejection reason.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StateMessage {
  int schema_version = kSchemaVersion;
  std::uint64_t tick = 0;
  std::string scenario;
  bool interactive = false;
  bool paused = false;
  session::TelemetryRecord record;
  std::vector<std::string> clutch_modes;  // "idle" | "excite" | "demag", per actuated joint
  std::vector<bool> clamped;              // per actuated joint

  bool operator==(const StateMessage&) const = default;
};

StateMessage make_state(std::uint64_t tick, const std::string& scenario, bool interactive, bool paused,
                        const session::TelemetryRecord& record,
                        const std::vector<clutch::ClutchState>& clutches,
                        const std::vector<feedback::JointCommand>& commands);

/// One JSON text frame. Doubles use shortest round-trip form, so decode(encode(m)) == m.
std::string encode_state(const StateMessage& message);
StateMessage decode_state(const std::string& text);

enum class CommandKind { jog, set_pose, demag, select_scenario, pause, resume, reset };

const char* to_string(CommandKind kind);

struct CommandMessage {
  std::string id;  // echoed in the reply, may be empty
  CommandKind kind = CommandKind::pause;
  std::vector<double> values;  // jog deltas or set_pose angles (rad)
  std::string scenario;        // select_scenario name

  bool operator==(const CommandMessage&) const = default;
};

/// Throws ProtocolError for bad JSON, unknown kinds, or a payload that does not fit the kind.
CommandMessage parse_command(const std::string& text);
std::string encode_command(const CommandMessage& command);

struct Reply {
  std::string id;
  bool accepted = false;
  std::string kind;
  std::uint64_t effect_tick = 0;  // accepted only
  std::string reason;             // rejected only

  bool operator==(const Reply&) const = default;
};

Reply make_ack(const std::string& id, const std::string& kind, std::uint64_t effect_tick);
Reply make_reject(const std::string& id, const std::string& reason);

std::string encode_reply(const Reply& reply);
Reply decode_reply(const std::string& text);

struct Health {
  std::string scenario;
  std::uint64_t tick = 0;
  bool paused = false;
  std::size_t subscribers = 0;
};

std::string encode_health(const Health& health);

}  // namespace mrtele::bridge
