#pragma once

// Controller and device state machines. They are passive values: every
// handler takes the current virtual time and returns a Reaction describing
// frames to transmit, a timer to arm and any application delivery. The
// network glue feeds them from the medium's event loop.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zwsim/crypto.hpp"
#include "zwsim/sniff.hpp"
#include "zwsim/types.hpp"
#include "zwsim/wire.hpp"

namespace zwsim::nodes {

using namespace std::chrono_literals;

inline constexpr SimTime kMinNonceTimeout = 3s;
inline constexpr SimTime kMaxNonceTimeout = 20s;
inline constexpr SimTime kDefaultNonceTimeout = 10s;

/// Throws std::invalid_argument when the receiver nonce timer is outside the
/// mandatory 3-20 s window.
void validate_nonce_timeout(SimTime timeout);

enum class NodeStatus { Alive, Failed };

struct NodeSpec {
  NodeId id;
  SecurityClass security = SecurityClass::S0;
  NodeStatus status = NodeStatus::Alive;
  bool responds_to_nonce_get = true;
};

struct TimerRequest {
  SimTime at{};
  std::uint64_t token = 0;
};

struct DeliveredEvent {
  NodeId from;
  Bytes payload;
  SimTime at{};
  SecurityClass via = SecurityClass::S0;
};

/// An S0 NonceReport the controller issued, with the request it answered.
struct NonceIssue {
  NodeId to;
  std::uint64_t request_ref = 0;
  SimTime issued{};
  SimTime deadline{};
};

struct Reaction {
  std::vector<wire::MacFrame> frames;
  std::optional<TimerRequest> timer;
  std::optional<DeliveredEvent> delivered;
  std::optional<NonceIssue> issued;
  /// Receiver-side outcome of the frame being handled, if it differs from a
  /// plain delivery.
  std::optional<sniff::TraceStatus> status;
  std::string note;

  void add_note(std::string_view n) {
    if (!note.empty()) note += "; ";
    note += n;
  }
};

struct NonceRecord {
  crypto::S0Nonce nonce;
  NodeId issued_to;
  SimTime issued{};
  SimTime deadline{};
  std::uint64_t request_ref = 0;
};

enum class RequestKind { S0Nonce, S2Nonce, S2Resync };

struct PendingRequest {
  NodeId requester;
  SimTime received{};
  RequestKind kind = RequestKind::S0Nonce;
  std::uint64_t request_ref = 0;
};

struct SpanState {
  enum class Phase { NotSynced, Synced };
  Phase phase = Phase::NotSynced;
  std::optional<crypto::CtrDrbgState> drbg;
  /// Receiver half the controller last sent in an S2NonceReport, waiting for
  /// the sender half carried by the next encapsulation.
  std::optional<wire::Entropy16> receiver_entropy;

  bool synced() const { return phase == Phase::Synced; }
  void reset() { *this = SpanState{}; }
  void sync(const std::array<std::uint8_t, 32>& entropy);
};

struct ControllerConfig {
  HomeId home;
  SimTime nonce_timeout = kDefaultNonceTimeout;
  std::size_t queue_capacity = 64;
  crypto::NetworkKeys keys;
  std::uint64_t seed = 1;
};

class Controller {
 public:
  Controller(ControllerConfig config, const std::vector<NodeSpec>& included);

  /// `request_ref` identifies the received frame (the trace line) so issued
  /// nonces can be traced back to the request they answer.
  Reaction on_frame(const wire::MacFrame& frame, SimTime now, std::uint64_t request_ref = 0);
  Reaction on_timer(std::uint64_t token, SimTime now);

  /// Installs an already agreed SPAN, as after a completed earlier exchange.
  void establish_span(NodeId node, const std::array<std::uint8_t, 32>& entropy);

  bool is_included(NodeId id) const { return included_.contains(id); }
  const NodeSpec* included(NodeId id) const;
  const std::optional<NonceRecord>& active() const { return active_; }
  const std::deque<PendingRequest>& pending_queue() const { return queue_; }
  const SpanState& span(NodeId id) const;
  const std::vector<DeliveredEvent>& delivered_events() const { return delivered_; }
  std::size_t max_queue_depth() const { return max_queue_depth_; }
  std::uint64_t queue_overflows() const { return overflows_; }
  const ControllerConfig& config() const { return config_; }

 private:
  void issue_s0_nonce(NodeId to, std::uint64_t request_ref, SimTime now, Reaction& r);
  void send_s2_report(NodeId to, bool sos, Reaction& r);
  void service_queue(std::optional<NodeId> previous_holder, SimTime now, Reaction& r);
  bool enqueue(PendingRequest req, Reaction& r);
  bool s2_reply_queued(NodeId id) const;

  void handle_s0_nonce_get(const wire::MacFrame& f, SimTime now, std::uint64_t ref, Reaction& r);
  void handle_s0_encap(const wire::MacFrame& f, const wire::S0MsgEncap& p, SimTime now, Reaction& r);
  void handle_s2_nonce_get(const wire::MacFrame& f, SimTime now, std::uint64_t ref, Reaction& r);
  void handle_s2_encap(const wire::MacFrame& f, const wire::S2MsgEncap& p, SimTime now, std::uint64_t ref,
                       Reaction& r);

  ControllerConfig config_;
  std::map<NodeId, NodeSpec> included_;
  std::deque<PendingRequest> queue_;
  std::optional<NonceRecord> active_;
  std::map<NodeId, SpanState> spans_;
  std::vector<DeliveredEvent> delivered_;
  crypto::Prng prng_;
  std::uint64_t timer_token_ = 0;
  std::uint8_t seqn_ = 0;
  std::size_t max_queue_depth_ = 0;
  std::uint64_t overflows_ = 0;
};

struct DeviceConfig {
  NodeSpec spec;
  HomeId home;
  crypto::NetworkKeys keys;
  std::uint64_t seed = 1;
  SimTime retry_interval = 5s;
  unsigned max_retries = 20;
  /// Optional sender-side nonce request timer. When set, an S0 handshake
  /// whose NonceReport does not arrive in time is abandoned.
  std::optional<SimTime> nonce_request_timeout;
};

class Device {
 public:
  enum class Phase { Idle, AwaitingS0Report, AwaitingS0Ack, AwaitingS2Report, AwaitingS2Ack, S2RetriesExhausted };

  explicit Device(DeviceConfig config);

  Reaction trigger_event(Bytes payload, SimTime now);
  Reaction on_frame(const wire::MacFrame& frame, SimTime now);
  Reaction on_timer(std::uint64_t token, SimTime now);

  void establish_span(const std::array<std::uint8_t, 32>& entropy);
  void fail() { config_.spec.status = NodeStatus::Failed; }

  bool alive() const { return config_.spec.status == NodeStatus::Alive; }
  NodeId id() const { return config_.spec.id; }
  const NodeSpec& spec() const { return config_.spec; }
  Phase phase() const { return phase_; }
  const SpanState& span() const { return span_; }
  std::size_t pending_events() const { return events_.size(); }
  unsigned retry_count() const { return retry_count_; }
  std::uint64_t encapsulations_sent() const { return encapsulations_sent_; }

 private:
  void start_next(SimTime now, Reaction& r);
  void send_s2_encap(std::optional<wire::Entropy16> sender_entropy, SimTime now, Reaction& r);
  void finish_event(SimTime now, Reaction& r);
  void arm_timer(SimTime at, Reaction& r);
  wire::MacFrame to_controller(wire::CommandPayload payload);

  DeviceConfig config_;
  std::deque<Bytes> events_;
  Phase phase_ = Phase::Idle;
  SpanState span_;
  std::optional<wire::MacFrame> last_encap_;
  unsigned retry_count_ = 0;
  std::uint64_t timer_token_ = 0;
  std::uint8_t seqn_ = 0;
  std::uint8_t ack_seqn_ = 0;
  std::uint64_t encapsulations_sent_ = 0;
  crypto::Prng prng_;
};

}  // namespace zwsim::nodes
