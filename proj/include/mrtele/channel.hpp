#pragma once

#include "mrtele/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <vector>

namespace mrtele::session {

struct ChannelConfig {
  double base_delay = 0.0;        // s
  double jitter = 0.0;            // s, uniform in [0, jitter]
  double drop_probability = 0.0;  // [0, 1)
  double tick_rate = 500.0;       // Hz

  void validate() const {
    if (!(base_delay >= 0.0) || !std::isfinite(base_delay)) {
      throw InvalidArgument("channel base_delay must be >= 0");
    }
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw InvalidArgument("channel jitter must be >= 0");
    if (!(drop_probability >= 0.0) || !(drop_probability < 1.0)) {
      throw InvalidArgument("channel drop_probability must be in [0, 1)");
    }
    if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) {
      throw InvalidArgument("channel tick_rate must be > 0");
    }
  }
};

template <typename Payload>
struct ChannelMessage {
  Payload payload;
  double send_time = 0.0;
  double deliver_time = 0.0;
};

/// One-way FIFO link with delay, jitter and loss. A message never overtakes an
/// earlier one: its delivery time is clamped up to its predecessor's.
template <typename Payload>
class DelayChannel {
 public:
  explicit DelayChannel(ChannelConfig config = {}) : config_(config) { config_.validate(); }

  /// Returns false if the message was dropped.
  bool send(Payload payload, double now, std::mt19937_64& rng) {
    if (config_.drop_probability > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng) < config_.drop_probability) return false;
    }
    double deliver = now + config_.base_delay;
    if (config_.jitter > 0.0) {
      std::uniform_real_distribution<double> j(0.0, config_.jitter);
      deliver += j(rng);
    }
    deliver = std::max(deliver, last_deliver_time_);
    last_deliver_time_ = deliver;
    queue_.push_back({std::move(payload), now, deliver});
    return true;
  }

  /// Pops every message due at `now`, in send order. `now` must not go backwards.
  std::vector<ChannelMessage<Payload>> deliver(double now) {
    if (now < last_now_) throw InvalidArgument("channel time went backwards");
    last_now_ = now;
    std::vector<ChannelMessage<Payload>> out;
    // Tolerance absorbs tick-time rounding (k / rate vs. accumulated delays).
    while (!queue_.empty() && queue_.front().deliver_time <= now + 1e-9) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    return out;
  }

  std::size_t in_flight() const { return queue_.size(); }
  const ChannelConfig& config() const { return config_; }

 private:
  ChannelConfig config_;
  std::deque<ChannelMessage<Payload>> queue_;
  double last_deliver_time_ = -std::numeric_limits<double>::infinity();
  double last_now_ = -std::numeric_limits<double>::infinity();
};

/// Free-function form: delivers what is due from `channel` at `now`.
template <typename Payload>
std::vector<Payload> channel_step(DelayChannel<Payload>& channel, double now) {
  std::vector<Payload> out;
  for (auto& m : channel.deliver(now)) out.push_back(std::move(m.payload));
  return out;
}

}  // namespace mrtele::session
