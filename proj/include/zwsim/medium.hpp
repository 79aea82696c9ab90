#pragma once

// Discrete-event scheduler and lossy broadcast medium. Virtual time only;
// events run in (time, seq) order where seq is the scheduling order.

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <variant>
#include <vector>

#include "zwsim/crypto.hpp"
#include "zwsim/sniff.hpp"
#include "zwsim/types.hpp"
#include "zwsim/wire.hpp"

namespace zwsim::medium {

using namespace std::chrono_literals;

struct MediumConfig {
  SimTime propagation_delay = 10ms;
  double loss_probability = 0.0;
  double crc_corruption_probability = 0.0;
  /// Independent corruption draw for what the sniffer tap sees.
  double tap_crc_probability = 0.0;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on probabilities outside [0, 1] or a
  /// negative delay.
  void validate() const;
};

enum class Origin { Node, Attacker };

struct DeliverEvent {
  Bytes bytes;
  NodeId to;
  std::uint64_t trace_line = 0;
};
struct TimerEvent {
  NodeId node;
  std::uint64_t token = 0;
};
struct TriggerEvent {
  NodeId node;
  Bytes payload;
};
struct ActionEvent {
  std::function<void(SimTime)> run;
};

using EventKind = std::variant<DeliverEvent, TimerEvent, TriggerEvent, ActionEvent>;

struct SimEvent {
  SimTime time{};
  std::uint64_t seq = 0;
  EventKind kind;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void on_frame(const wire::MacFrame& frame, std::uint64_t trace_line, SimTime now) = 0;
  virtual void on_timer(std::uint64_t token, SimTime now) = 0;
  virtual void on_trigger(Bytes payload, SimTime now) = 0;
};

struct TapObservation {
  const wire::MacFrame& frame;
  SimTime time{};
  bool corrupted = false;
  Origin origin = Origin::Node;
  std::uint64_t trace_line = 0;
};

using TapListener = std::function<void(const TapObservation&)>;

struct Counters {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t frames_lost = 0;
  std::uint64_t frames_corrupted = 0;
  std::uint64_t events_processed = 0;
};

struct SimReport {
  SimTime end{};
  Counters counters;
};

class Medium {
 public:
  explicit Medium(MediumConfig config);

  Medium(const Medium&) = delete;
  Medium& operator=(const Medium&) = delete;

  void attach(NodeId id, Endpoint& endpoint);
  void add_tap(TapListener listener);

  /// Throws std::invalid_argument for an event dated before now().
  std::uint64_t schedule(SimTime at, EventKind kind);

  /// Broadcasts `frame` at now(). Returns the trace line recorded for it.
  std::uint64_t transmit(const wire::MacFrame& frame, Origin origin = Origin::Node, std::string note = {});

  /// Runs every event with time <= t_end, then parks the clock at t_end.
  SimReport run_until(SimTime t_end);

  SimTime now() const { return now_; }
  bool idle() const { return queue_.empty(); }
  std::size_t pending_events() const { return queue_.size(); }
  const Counters& counters() const { return counters_; }
  sniff::Trace& trace() { return trace_; }
  const sniff::Trace& trace() const { return trace_; }
  const MediumConfig& config() const { return config_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void dispatch(SimEvent& ev);

  MediumConfig config_;
  crypto::Prng rng_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  std::map<NodeId, Endpoint*> endpoints_;
  std::vector<TapListener> taps_;
  sniff::Trace trace_;
  Counters counters_;
  SimTime now_{0};
  std::uint64_t next_seq_ = 0;
};

}  // namespace zwsim::medium
