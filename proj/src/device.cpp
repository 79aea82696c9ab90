#include <fmt/format.h>

#include "zwsim/nodes.hpp"

namespace zwsim::nodes {

Device::Device(DeviceConfig config) : config_(std::move(config)), prng_(config_.seed) {
  if (config_.spec.id.is_controller()) throw std::invalid_argument("device cannot use the controller's node id");
}

void Device::establish_span(const std::array<std::uint8_t, 32>& entropy) { span_.sync(entropy); }

wire::MacFrame Device::to_controller(wire::CommandPayload payload) {
  return wire::make_frame(config_.home, id(), NodeId::controller(), std::move(payload), ++seqn_);
}

void Device::arm_timer(SimTime at, Reaction& r) { r.timer = TimerRequest{at, ++timer_token_}; }

Reaction Device::trigger_event(Bytes payload, SimTime now) {
  Reaction r;
  if (!alive()) {
    r.add_note("device failed, event not sent");
    return r;
  }
  events_.push_back(std::move(payload));
  if (phase_ == Phase::Idle) start_next(now, r);
  return r;
}

void Device::start_next(SimTime now, Reaction& r) {
  if (events_.empty()) {
    phase_ = Phase::Idle;
    return;
  }
  if (config_.spec.security == SecurityClass::S0) {
    r.frames.push_back(to_controller(wire::S0NonceGet{}));
    phase_ = Phase::AwaitingS0Report;
    if (config_.nonce_request_timeout) arm_timer(now + *config_.nonce_request_timeout, r);
    return;
  }
  if (span_.synced()) {
    send_s2_encap(std::nullopt, now, r);
  } else {
    r.frames.push_back(to_controller(wire::S2NonceGet{static_cast<std::uint8_t>(seqn_ + 1)}));
    phase_ = Phase::AwaitingS2Report;
  }
}

void Device::send_s2_encap(std::optional<wire::Entropy16> sender_entropy, SimTime now, Reaction& r) {
  const auto nonce = crypto::ctr_drbg_generate(*span_.drbg);
  const crypto::MacHeader header{id(), NodeId::controller(), wire::kS2MsgEncap};
  auto sealed = crypto::s2_seal(config_.keys, nonce, header, events_.front());
  wire::S2MsgEncap encap;
  encap.seqn = static_cast<std::uint8_t>(seqn_ + 1);
  encap.sender_entropy = sender_entropy;
  encap.ciphertext = std::move(sealed.ciphertext);
  encap.auth_tag = sealed.tag;
  last_encap_ = to_controller(std::move(encap));
  ack_seqn_ = last_encap_->seqn;
  r.frames.push_back(*last_encap_);
  ++encapsulations_sent_;
  phase_ = Phase::AwaitingS2Ack;
  retry_count_ = 0;
  arm_timer(now + config_.retry_interval, r);
}

void Device::finish_event(SimTime now, Reaction& r) {
  events_.pop_front();
  last_encap_.reset();
  retry_count_ = 0;
  ++timer_token_;  // disarm
  phase_ = Phase::Idle;
  start_next(now, r);
}

Reaction Device::on_frame(const wire::MacFrame& frame, SimTime now) {
  Reaction r;
  if (frame.dst != id() || !alive()) return r;

  if (std::holds_alternative<wire::MacAck>(frame.payload)) {
    // Acks for someone else's frame (say, a spoofed one using our id) carry
    // a different sequence number.
    if (frame.seqn != ack_seqn_) return r;
    if (phase_ == Phase::AwaitingS2Ack) {
      // The controller retires the SPAN once it accepts an encapsulation.
      span_.reset();
      finish_event(now, r);
    } else if (phase_ == Phase::AwaitingS0Ack) {
      finish_event(now, r);
    }
    return r;
  }

  if (const auto* report = std::get_if<wire::S0NonceReport>(&frame.payload)) {
    if (phase_ != Phase::AwaitingS0Report) {
      r.add_note("unsolicited S0 nonce report ignored");
      return r;
    }
    const crypto::S0Nonce receiver{report->nonce};
    const auto sender = crypto::generate_s0_nonce(prng_);
    const auto iv = crypto::make_iv(sender, receiver);
    wire::S0MsgEncap encap;
    encap.sender_nonce = sender.bytes;
    encap.ciphertext = crypto::s0_encrypt(config_.keys.encryption_key, iv, events_.front());
    encap.receiver_nonce_id = receiver.id();
    encap.mac = crypto::s0_mac(config_.keys.authentication_key, iv,
                               crypto::MacHeader{id(), NodeId::controller(), wire::kS0MsgEncap}, encap.ciphertext);
    r.frames.push_back(to_controller(std::move(encap)));
    ack_seqn_ = r.frames.back().seqn;
    ++encapsulations_sent_;
    ++timer_token_;
    phase_ = Phase::AwaitingS0Ack;
    return r;
  }

  if (const auto* report = std::get_if<wire::S2NonceReport>(&frame.payload)) {
    const bool waiting = phase_ == Phase::AwaitingS2Report || phase_ == Phase::AwaitingS2Ack ||
                         phase_ == Phase::S2RetriesExhausted;
    if (config_.spec.security != SecurityClass::S2 || !waiting) {
      // The device never asked for this nonce, so it keeps its own SPAN.
      r.add_note("unsolicited S2 nonce report ignored");
      return r;
    }
    const auto own_half = prng_.bytes<16>();
    span_.sync(crypto::span_entropy(own_half, report->receiver_entropy));
    send_s2_encap(own_half, now, r);
    return r;
  }

  if (std::holds_alternative<wire::S0NonceGet>(frame.payload)) {
    if (frame.ack_requested) r.frames.push_back(wire::make_ack(config_.home, id(), frame.src, frame.seqn));
    if (config_.spec.responds_to_nonce_get)
      r.frames.push_back(wire::make_frame(config_.home, id(), frame.src,
                                          wire::S0NonceReport{crypto::generate_s0_nonce(prng_).bytes}, ++seqn_));
    return r;
  }
  return r;
}

Reaction Device::on_timer(std::uint64_t token, SimTime now) {
  Reaction r;
  if (token != timer_token_ || !alive()) return r;
  switch (phase_) {
    case Phase::AwaitingS2Ack:
      if (retry_count_ < config_.max_retries) {
        ++retry_count_;
        r.frames.push_back(*last_encap_);
        ++encapsulations_sent_;
        r.add_note(fmt::format("retransmission {}", retry_count_));
        arm_timer(now + config_.retry_interval, r);
      } else {
        phase_ = Phase::S2RetriesExhausted;
        r.add_note("retries exhausted, waiting for a nonce report");
      }
      break;
    case Phase::AwaitingS0Report:
      r.add_note("nonce request timed out, event abandoned");
      finish_event(now, r);
      break;
    default:
      break;
  }
  return r;
}

}  // namespace zwsim::nodes
