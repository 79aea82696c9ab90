#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "zwsim/nodes.hpp"

namespace zwsim::nodes {

using sniff::TraceStatus;

void validate_nonce_timeout(SimTime timeout) {
  if (timeout < kMinNonceTimeout || timeout > kMaxNonceTimeout)
    throw std::invalid_argument(
        fmt::format("nonce timeout {:.3f} s outside the mandatory receiver timer range of 3-20 seconds",
                    to_seconds(timeout)));
}

void SpanState::sync(const std::array<std::uint8_t, 32>& entropy) {
  phase = Phase::Synced;
  drbg = crypto::ctr_drbg_instantiate(entropy);
  receiver_entropy.reset();
}

Controller::Controller(ControllerConfig config, const std::vector<NodeSpec>& included)
    : config_(std::move(config)), prng_(config_.seed) {
  validate_nonce_timeout(config_.nonce_timeout);
  if (config_.queue_capacity == 0) throw std::invalid_argument("queue capacity must be positive");
  for (const auto& spec : included) {
    if (spec.id.is_controller()) throw std::invalid_argument("node 1 is the controller itself");
    if (!included_.emplace(spec.id, spec).second)
      throw std::invalid_argument(fmt::format("node {} included twice", spec.id.value()));
  }
}

const NodeSpec* Controller::included(NodeId id) const {
  auto it = included_.find(id);
  return it == included_.end() ? nullptr : &it->second;
}

const SpanState& Controller::span(NodeId id) const {
  static const SpanState kEmpty{};
  auto it = spans_.find(id);
  return it == spans_.end() ? kEmpty : it->second;
}

void Controller::establish_span(NodeId node, const std::array<std::uint8_t, 32>& entropy) {
  spans_[node].sync(entropy);
}

Reaction Controller::on_frame(const wire::MacFrame& frame, SimTime now, std::uint64_t request_ref) {
  Reaction r;
  if (!frame.dst.is_controller()) return r;
  if (frame.home != config_.home) {
    r.add_note("foreign home id");
    return r;
  }
  if (frame.src.is_controller()) {
    r.add_note("anomaly: frame claims the controller as source");
    return r;
  }
  if (!is_included(frame.src)) {
    r.status = TraceStatus::IgnoredNotIncluded;
    return r;
  }

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, wire::S0NonceGet>) {
          handle_s0_nonce_get(frame, now, request_ref, r);
        } else if constexpr (std::is_same_v<P, wire::S0MsgEncap>) {
          handle_s0_encap(frame, p, now, r);
        } else if constexpr (std::is_same_v<P, wire::S2NonceGet>) {
          handle_s2_nonce_get(frame, now, request_ref, r);
        } else if constexpr (std::is_same_v<P, wire::S2MsgEncap>) {
          handle_s2_encap(frame, p, now, request_ref, r);
        } else if constexpr (std::is_same_v<P, wire::AppEvent>) {
          if (frame.ack_requested) r.frames.push_back(wire::make_ack(config_.home, NodeId::controller(), frame.src, frame.seqn));
          r.add_note("plaintext application frame");
        } else {
          // Acks and reports addressed to the controller need no handling.
        }
      },
      frame.payload);
  return r;
}

void Controller::handle_s0_nonce_get(const wire::MacFrame& f, SimTime now, std::uint64_t ref, Reaction& r) {
  if (f.ack_requested) r.frames.push_back(wire::make_ack(config_.home, NodeId::controller(), f.src, f.seqn));
  if (!active_) {
    issue_s0_nonce(f.src, ref, now, r);
    return;
  }
  enqueue(PendingRequest{f.src, now, RequestKind::S0Nonce, ref}, r);
}

void Controller::handle_s0_encap(const wire::MacFrame& f, const wire::S0MsgEncap& p, SimTime now, Reaction& r) {
  if (!active_ || active_->issued_to != f.src || active_->nonce.id() != p.receiver_nonce_id) {
    r.status = TraceStatus::DecryptFailed;
    r.add_note("no matching receiver nonce");
    return;
  }
  const auto iv = crypto::make_iv(crypto::S0Nonce{p.sender_nonce}, active_->nonce);
  const crypto::MacHeader header{f.src, f.dst, wire::kS0MsgEncap};
  if (crypto::s0_mac(config_.keys.authentication_key, iv, header, p.ciphertext) != p.mac) {
    r.status = TraceStatus::DecryptFailed;
    r.add_note("MAC mismatch");
    return;
  }
  auto plaintext = crypto::s0_encrypt(config_.keys.encryption_key, iv, p.ciphertext);
  if (f.ack_requested) r.frames.push_back(wire::make_ack(config_.home, NodeId::controller(), f.src, f.seqn));

  DeliveredEvent ev{f.src, std::move(plaintext), now, SecurityClass::S0};
  delivered_.push_back(ev);
  r.delivered = std::move(ev);
  r.add_note("event delivered");

  const NodeId holder = active_->issued_to;
  active_.reset();
  ++timer_token_;
  service_queue(holder, now, r);
}

void Controller::handle_s2_nonce_get(const wire::MacFrame& f, SimTime now, std::uint64_t ref, Reaction& r) {
  if (included_.at(f.src).security != SecurityClass::S2) {
    r.add_note("S2 nonce request from an S0 node ignored");
    return;
  }
  if (f.ack_requested) r.frames.push_back(wire::make_ack(config_.home, NodeId::controller(), f.src, f.seqn));
  // The request alone discards whatever SPAN was agreed with this node.
  spans_[f.src].reset();
  if (!active_) {
    send_s2_report(f.src, false, r);
    return;
  }
  if (s2_reply_queued(f.src)) {
    r.status = TraceStatus::QueuedBehindSlot;
    r.add_note("S2 reply already queued");
    return;
  }
  enqueue(PendingRequest{f.src, now, RequestKind::S2Nonce, ref}, r);
}

void Controller::handle_s2_encap(const wire::MacFrame& f, const wire::S2MsgEncap& p, SimTime now,
                                 std::uint64_t ref, Reaction& r) {
  if (included_.at(f.src).security != SecurityClass::S2) {
    r.status = TraceStatus::DecryptFailed;
    r.add_note("S2 frame from an S0 node");
    return;
  }
  SpanState& span = spans_[f.src];
  const crypto::MacHeader header{f.src, f.dst, wire::kS2MsgEncap};

  std::optional<crypto::CtrDrbgState> candidate;
  if (p.sender_entropy && span.receiver_entropy) {
    candidate = crypto::ctr_drbg_instantiate(crypto::span_entropy(*p.sender_entropy, *span.receiver_entropy));
  } else if (!p.sender_entropy && span.synced()) {
    candidate = span.drbg;
  }

  std::optional<Bytes> plaintext;
  if (candidate) {
    const auto nonce = crypto::ctr_drbg_generate(*candidate);
    plaintext = crypto::s2_open(config_.keys, nonce, header, p.ciphertext, p.auth_tag);
  }

  if (plaintext) {
    if (f.ack_requested) r.frames.push_back(wire::make_ack(config_.home, NodeId::controller(), f.src, f.seqn));
    DeliveredEvent ev{f.src, std::move(*plaintext), now, SecurityClass::S2};
    delivered_.push_back(ev);
    r.delivered = std::move(ev);
    r.add_note("event delivered");
    // A SPAN carries one delivery; the next event needs a fresh exchange.
    span.reset();
    return;
  }

  // Undecryptable: no ack, ask the sender to resynchronize.
  r.status = TraceStatus::DecryptFailed;
  if (!active_) {
    send_s2_report(f.src, true, r);
    r.add_note("resync report sent");
  } else if (s2_reply_queued(f.src)) {
    r.add_note("resync already queued");
  } else {
    if (enqueue(PendingRequest{f.src, now, RequestKind::S2Resync, ref}, r)) r.add_note("resync queued behind secure slot");
    r.status = TraceStatus::DecryptFailed;
  }
}

bool Controller::enqueue(PendingRequest req, Reaction& r) {
  r.status = TraceStatus::QueuedBehindSlot;
  if (queue_.size() >= config_.queue_capacity) {
    ++overflows_;
    r.add_note("queue full, dropped");
    return false;
  }
  queue_.push_back(req);
  max_queue_depth_ = std::max(max_queue_depth_, queue_.size());
  r.add_note(fmt::format("queue depth {}", queue_.size()));
  return true;
}

bool Controller::s2_reply_queued(NodeId id) const {
  return std::any_of(queue_.begin(), queue_.end(), [&](const PendingRequest& q) {
    return q.requester == id && q.kind != RequestKind::S0Nonce;
  });
}

void Controller::issue_s0_nonce(NodeId to, std::uint64_t request_ref, SimTime now, Reaction& r) {
  const auto nonce = crypto::generate_s0_nonce(prng_);
  active_ = NonceRecord{nonce, to, now, now + config_.nonce_timeout, request_ref};
  r.frames.push_back(wire::make_frame(config_.home, NodeId::controller(), to, wire::S0NonceReport{nonce.bytes}, ++seqn_));
  r.timer = TimerRequest{active_->deadline, ++timer_token_};
  r.issued = NonceIssue{to, request_ref, now, active_->deadline};
}

void Controller::send_s2_report(NodeId to, bool sos, Reaction& r) {
  auto entropy = prng_.bytes<16>();
  SpanState& span = spans_[to];
  span.reset();
  span.receiver_entropy = entropy;
  r.frames.push_back(wire::make_frame(config_.home, NodeId::controller(), to, wire::S2NonceReport{sos, entropy}, ++seqn_));
}

// Requests from the node that just held the slot are served before anyone
// else's, in arrival order; otherwise the queue is served first come first
// served. S2 replies do not occupy the slot, so several can go out at once.
void Controller::service_queue(std::optional<NodeId> previous_holder, SimTime now, Reaction& r) {
  while (!active_ && !queue_.empty()) {
    auto it = queue_.begin();
    if (previous_holder) {
      auto same = std::find_if(queue_.begin(), queue_.end(), [&](const PendingRequest& q) {
        return q.requester == *previous_holder && q.kind == RequestKind::S0Nonce;
      });
      if (same != queue_.end()) it = same;
    }
    const PendingRequest req = *it;
    queue_.erase(it);
    if (req.kind == RequestKind::S0Nonce) {
      issue_s0_nonce(req.requester, req.request_ref, now, r);
    } else {
      send_s2_report(req.requester, req.kind == RequestKind::S2Resync, r);
    }
  }
}

Reaction Controller::on_timer(std::uint64_t token, SimTime now) {
  Reaction r;
  if (token != timer_token_ || !active_ || now < active_->deadline) return r;
  const NodeId holder = active_->issued_to;
  active_.reset();
  r.add_note(fmt::format("nonce for node {} expired", holder.value()));
  service_queue(holder, now, r);
  return r;
}

}  // namespace zwsim::nodes
