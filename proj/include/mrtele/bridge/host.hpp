#pragma once

#include "mrtele/bridge/protocol.hpp"
#include "mrtele/session.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace mrtele::bridge {

/// One consumer's view of the state stream. Holds a single slot: a new state
/// replaces an untaken one, so a slow reader sees a strictly increasing subsequence.
class Subscription {
 public:
  std::optional<StateMessage> next(std::chrono::milliseconds timeout);
  std::optional<StateMessage> try_next();

  void close();
  bool closed() const;
  std::uint64_t dropped() const;

  void offer(const StateMessage& message);

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<StateMessage> slot_;
  bool closed_ = false;
  std::uint64_t dropped_ = 0;
};

class Publisher {
 public:
  std::shared_ptr<Subscription> subscribe();
  void publish(const StateMessage& message);
  std::size_t count() const;
  void close_all();

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> subs_;
};

/// What the network server talks to: a state stream plus a command sink.
class StateSource {
 public:
  virtual ~StateSource() = default;
  virtual std::shared_ptr<Subscription> subscribe() = 0;
  /// Resolves once the command has been applied (ack) or refused (reject).
  virtual std::future<Reply> submit(CommandMessage command) = 0;
  virtual Health health() const = 0;
};

struct HostOptions {
  double realtime_factor = 1.0;  // simulated seconds per wall second; <= 0 runs flat out
  std::string scenario_dir;      // select_scenario resolves <dir>/<name>.json
  bool record = false;           // keep every TelemetryRecord
};

/// Owns a Session. Commands queue losslessly and are applied at the next tick
/// boundary; every tick is published to all subscribers.
class SimulationHost : public StateSource {
 public:
  explicit SimulationHost(session::Scenario scenario, HostOptions options = {});
  ~SimulationHost() override;

  SimulationHost(const SimulationHost&) = delete;
  SimulationHost& operator=(const SimulationHost&) = delete;

  std::shared_ptr<Subscription> subscribe() override;
  std::future<Reply> submit(CommandMessage command) override;
  Health health() const override;

  /// Manual driving (no thread): apply queued commands, then run one tick unless
  /// paused or the scripted run is over. Returns whether a tick ran.
  bool step();
  /// Applies queued commands without ticking.
  void pump();

  void start();
  void stop();
  bool running() const { return running_.load(); }

  bool finished() const;
  std::vector<session::TelemetryRecord> recorded() const;

 private:
  struct Pending {
    CommandMessage command;
    std::promise<Reply> reply;
  };

  void drain_locked();
  Reply apply_locked(const CommandMessage& command);
  bool tick_locked();
  void loop();

  HostOptions options_;
  session::Scenario scenario_;

  mutable std::mutex mu_;
  std::unique_ptr<session::Session> session_;
  bool paused_ = false;
  std::vector<session::TelemetryRecord> recorded_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Pending> queue_;

  Publisher publisher_;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

/// Streams a recorded telemetry file. Only pause, resume and reset are accepted.
class ReplayHost : public StateSource {
 public:
  ReplayHost(std::vector<session::TelemetryRecord> records, std::string name, double rate_factor = 1.0);
  ~ReplayHost() override;

  std::shared_ptr<Subscription> subscribe() override;
  std::future<Reply> submit(CommandMessage command) override;
  Health health() const override;

  bool step();
  void start();
  void stop();
  bool finished() const;

 private:
  StateMessage message_for(std::size_t index) const;
  void loop();

  std::vector<session::TelemetryRecord> records_;
  std::string name_;
  double rate_factor_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
  bool paused_ = false;
  Publisher publisher_;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

}  // namespace mrtele::bridge
