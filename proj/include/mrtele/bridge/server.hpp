#pragma once

#include "mrtele/bridge/host.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace mrtele::bridge {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
};

/// HTTP + websocket front end. GET /healthz answers with scenario and tick;
/// /ws upgrades to a websocket that streams state frames and takes command frames.
class BridgeServer {
 public:
  BridgeServer(StateSource& source, ServerOptions options = {});
  ~BridgeServer();

  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Binds and starts accepting on a background thread.
  void start();
  void stop();
  /// Port actually bound (useful with port 0).
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mrtele::bridge
