#include "mrtele/bridge/host.hpp"

#include "mrtele/errors.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

namespace mrtele::bridge {

namespace {

using Clock = std::chrono::steady_clock;

bool safe_name(const std::string& name) {
  if (name.empty() || name.size() > 128) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::future<Reply> ready(Reply reply) {
  std::promise<Reply> p;
  p.set_value(std::move(reply));
  return p.get_future();
}

/// Paces a loop so that tick k starts no earlier than origin + k * period.
class Pacer {
 public:
  explicit Pacer(double period) : period_(period) { rebase(); }
  void rebase() {
    origin_ = Clock::now();
    ticks_ = 0;
  }
  void wait_for_next() {
    ++ticks_;
    if (period_ <= 0.0) return;
    const auto due = origin_ + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(period_ * static_cast<double>(ticks_)));
    std::this_thread::sleep_until(due);
  }

 private:
  double period_;
  Clock::time_point origin_;
  std::uint64_t ticks_ = 0;
};

}  // namespace

// Subscription ---------------------------------------------------------------

std::optional<StateMessage> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [this] { return slot_.has_value() || closed_; });
  if (!slot_) return std::nullopt;
  std::optional<StateMessage> out = std::move(slot_);
  slot_.reset();
  return out;
}

std::optional<StateMessage> Subscription::try_next() { return next(std::chrono::milliseconds(0)); }

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::uint64_t Subscription::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

void Subscription::offer(const StateMessage& message) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (slot_) ++dropped_;
    slot_ = message;
  }
  cv_.notify_one();
}

// Publisher ------------------------------------------------------------------

std::shared_ptr<Subscription> Publisher::subscribe() {
  auto sub = std::make_shared<Subscription>();
  std::lock_guard lock(mu_);
  subs_.push_back(sub);
  return sub;
}

void Publisher::publish(const StateMessage& message) {
  std::lock_guard lock(mu_);
  subs_.erase(std::remove_if(subs_.begin(), subs_.end(), [](const auto& s) { return s->closed(); }),
              subs_.end());
  for (const auto& s : subs_) s->offer(message);
}

std::size_t Publisher::count() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(subs_.begin(), subs_.end(), [](const auto& s) { return !s->closed(); }));
}

void Publisher::close_all() {
  std::lock_guard lock(mu_);
  for (const auto& s : subs_) s->close();
  subs_.clear();
}

// SimulationHost -------------------------------------------------------------

SimulationHost::SimulationHost(session::Scenario scenario, HostOptions options)
    : options_(std::move(options)),
      scenario_(std::move(scenario)),
      session_(std::make_unique<session::Session>(scenario_)) {}

SimulationHost::~SimulationHost() {
  stop();
  publisher_.close_all();
}

std::shared_ptr<Subscription> SimulationHost::subscribe() { return publisher_.subscribe(); }

std::future<Reply> SimulationHost::submit(CommandMessage command) {
  Pending p{std::move(command), {}};
  auto fut = p.reply.get_future();
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(p));
  }
  queue_cv_.notify_all();
  return fut;
}

Health SimulationHost::health() const {
  std::lock_guard lock(mu_);
  Health h;
  h.scenario = scenario_.run.name;
  h.tick = session_->ticks_completed();
  h.paused = paused_;
  h.subscribers = publisher_.count();
  return h;
}

bool SimulationHost::finished() const {
  std::lock_guard lock(mu_);
  return !session_->interactive() && session_->finished();
}

std::vector<session::TelemetryRecord> SimulationHost::recorded() const {
  std::lock_guard lock(mu_);
  return recorded_;
}

void SimulationHost::drain_locked() {
  std::deque<Pending> batch;
  {
    std::lock_guard lock(queue_mu_);
    batch.swap(queue_);
  }
  for (auto& p : batch) p.reply.set_value(apply_locked(p.command));
}

Reply SimulationHost::apply_locked(const CommandMessage& c) {
  const std::string kind = to_string(c.kind);
  auto to_vector = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  try {
    switch (c.kind) {
      case CommandKind::jog:
        session_->enqueue({session::OperatorCommandKind::jog, to_vector(c.values)});
        break;
      case CommandKind::set_pose:
        session_->enqueue({session::OperatorCommandKind::set_pose, to_vector(c.values)});
        break;
      case CommandKind::demag:
        session_->enqueue({session::OperatorCommandKind::demag, {}});
        break;
      case CommandKind::pause:
        paused_ = true;
        break;
      case CommandKind::resume:
        paused_ = false;
        break;
      case CommandKind::reset:
        session_ = std::make_unique<session::Session>(scenario_);
        recorded_.clear();
        break;
      case CommandKind::select_scenario: {
        if (!safe_name(c.scenario)) return make_reject(c.id, "scenario names are letters, digits, '_' or '-'");
        if (options_.scenario_dir.empty()) return make_reject(c.id, "no scenario directory configured");
        const auto path = std::filesystem::path(options_.scenario_dir) / (c.scenario + ".json");
        session::Scenario next = session::load_scenario_file(path.string());
        auto fresh = std::make_unique<session::Session>(next);
        scenario_ = std::move(next);
        session_ = std::move(fresh);
        recorded_.clear();
        break;
      }
    }
  } catch (const std::exception& e) {
    return make_reject(c.id, e.what());
  }
  return make_ack(c.id, kind, session_->ticks_completed());
}

bool SimulationHost::tick_locked() {
  if (paused_) return false;
  if (!session_->interactive() && session_->finished()) return false;
  const std::uint64_t tick = session_->ticks_completed();
  const auto& record = session_->step();
  if (options_.record) recorded_.push_back(record);
  publisher_.publish(make_state(tick, scenario_.run.name, session_->interactive(), paused_, record,
                                session_->clutches(), session_->last_commands()));
  return true;
}

bool SimulationHost::step() {
  std::lock_guard lock(mu_);
  drain_locked();
  return tick_locked();
}

void SimulationHost::pump() {
  std::lock_guard lock(mu_);
  drain_locked();
}

void SimulationHost::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void SimulationHost::stop() {
  if (!running_.exchange(false)) return;
  queue_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void SimulationHost::loop() {
  const double period = options_.realtime_factor > 0.0 ? scenario_.dt() / options_.realtime_factor : 0.0;
  Pacer pacer(period);
  while (running_.load()) {
    bool ticked = false;
    {
      std::lock_guard lock(mu_);
      drain_locked();
      ticked = tick_locked();
    }
    if (ticked) {
      pacer.wait_for_next();
    } else {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait_for(lock, std::chrono::milliseconds(20),
                         [this] { return !queue_.empty() || !running_.load(); });
      pacer.rebase();
    }
  }
}

// ReplayHost -----------------------------------------------------------------

ReplayHost::ReplayHost(std::vector<session::TelemetryRecord> records, std::string name, double rate_factor)
    : records_(std::move(records)), name_(std::move(name)), rate_factor_(rate_factor) {
  if (records_.empty()) throw InvalidArgument("replay needs at least one record");
}

ReplayHost::~ReplayHost() {
  stop();
  publisher_.close_all();
}

std::shared_ptr<Subscription> ReplayHost::subscribe() { return publisher_.subscribe(); }

std::future<Reply> ReplayHost::submit(CommandMessage c) {
  std::lock_guard lock(mu_);
  switch (c.kind) {
    case CommandKind::pause:
      paused_ = true;
      break;
    case CommandKind::resume:
      paused_ = false;
      break;
    case CommandKind::reset:
      next_ = 0;
      break;
    default:
      return ready(make_reject(c.id, std::string("replay is read-only; '") + to_string(c.kind) +
                                         "' is not available"));
  }
  return ready(make_ack(c.id, to_string(c.kind), next_));
}

Health ReplayHost::health() const {
  std::lock_guard lock(mu_);
  Health h;
  h.scenario = name_;
  h.tick = next_;
  h.paused = paused_;
  h.subscribers = publisher_.count();
  return h;
}

bool ReplayHost::finished() const {
  std::lock_guard lock(mu_);
  return next_ >= records_.size();
}

StateMessage ReplayHost::message_for(std::size_t index) const {
  const auto& r = records_[index];
  StateMessage m;
  m.tick = index;
  m.scenario = name_;
  m.paused = paused_;
  m.record = r;
  const bool demag = r.events & session::kEventDemag;
  const bool clamp = r.events & session::kEventClamp;
  for (double i : r.current) {
    m.clutch_modes.emplace_back(demag ? "demag" : (i > 0.0 ? "excite" : "idle"));
    m.clamped.push_back(clamp);
  }
  return m;
}

bool ReplayHost::step() {
  std::lock_guard lock(mu_);
  if (paused_ || next_ >= records_.size()) return false;
  publisher_.publish(message_for(next_));
  ++next_;
  return true;
}

void ReplayHost::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void ReplayHost::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
}

void ReplayHost::loop() {
  double period = 0.0;
  if (rate_factor_ > 0.0 && records_.size() > 1) {
    period = (records_[1].t - records_[0].t) / rate_factor_;
  }
  Pacer pacer(period);
  while (running_.load()) {
    if (step()) {
      pacer.wait_for_next();
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      pacer.rebase();
    }
  }
}

}  // namespace mrtele::bridge
