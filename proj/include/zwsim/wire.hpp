#pragma once

// MAC frame codec for the simulator's native byte layout:
//
//   home(4, big endian) | src(1) | flags(1) | seqn(1) | length(1) | dst(1) | payload(n) | checksum(1)
//
// `length` counts the whole frame including the checksum. `flags` carries the
// ack-request bit (0x40) and the header type in the low nibble (0x01
// singlecast, 0x03 ack). This is not certified Z-Wave PHY framing.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "zwsim/types.hpp"

namespace zwsim::wire {

inline constexpr std::size_t kMaxFrameSize = 64;
inline constexpr std::size_t kHeaderSize = 9;

inline constexpr std::uint8_t kCcSecurityS0 = 0x98;
inline constexpr std::uint8_t kCcSecurityS2 = 0x9F;
inline constexpr std::uint8_t kCcNotification = 0x71;

inline constexpr std::uint8_t kS0NonceGet = 0x40;
inline constexpr std::uint8_t kS0NonceReport = 0x80;
inline constexpr std::uint8_t kS0MsgEncap = 0x81;
inline constexpr std::uint8_t kS2NonceGet = 0x01;
inline constexpr std::uint8_t kS2NonceReport = 0x02;
inline constexpr std::uint8_t kS2MsgEncap = 0x03;

using Nonce8 = std::array<std::uint8_t, 8>;
using Entropy16 = std::array<std::uint8_t, 16>;
using Tag8 = std::array<std::uint8_t, 8>;

struct S0NonceGet {
  friend bool operator==(const S0NonceGet&, const S0NonceGet&) = default;
};

struct S0NonceReport {
  Nonce8 nonce{};
  friend bool operator==(const S0NonceReport&, const S0NonceReport&) = default;
};

struct S0MsgEncap {
  Nonce8 sender_nonce{};
  Bytes ciphertext;
  std::uint8_t receiver_nonce_id = 0;
  Tag8 mac{};
  friend bool operator==(const S0MsgEncap&, const S0MsgEncap&) = default;
};

struct S2NonceGet {
  std::uint8_t seqn = 0;
  friend bool operator==(const S2NonceGet&, const S2NonceGet&) = default;
};

struct S2NonceReport {
  bool sos = false;
  Entropy16 receiver_entropy{};
  friend bool operator==(const S2NonceReport&, const S2NonceReport&) = default;
};

struct S2MsgEncap {
  std::uint8_t seqn = 0;
  std::optional<Entropy16> sender_entropy;
  Bytes ciphertext;
  Tag8 auth_tag{};
  friend bool operator==(const S2MsgEncap&, const S2MsgEncap&) = default;
};

struct AppEvent {
  Bytes data;
  friend bool operator==(const AppEvent&, const AppEvent&) = default;
};

struct MacAck {
  friend bool operator==(const MacAck&, const MacAck&) = default;
};

/// Command class the codec does not model; raw payload bytes are kept.
struct UnknownPayload {
  Bytes raw;
  friend bool operator==(const UnknownPayload&, const UnknownPayload&) = default;
};

using CommandPayload = std::variant<S0NonceGet, S0NonceReport, S0MsgEncap, S2NonceGet, S2NonceReport,
                                    S2MsgEncap, AppEvent, MacAck, UnknownPayload>;

enum class HeaderType : std::uint8_t { Singlecast = 0x01, Ack = 0x03 };

struct MacFrame {
  HomeId home;
  NodeId src;
  NodeId dst;
  std::uint8_t seqn = 0;
  bool ack_requested = false;
  HeaderType header_type = HeaderType::Singlecast;
  CommandPayload payload = AppEvent{};
  /// Filled in by decode_frame; encode_frame always recomputes it.
  std::uint8_t checksum = 0;

  // Equality is over the frame content; the checksum is derived from it.
  friend bool operator==(const MacFrame& a, const MacFrame& b) {
    return a.home == b.home && a.src == b.src && a.dst == b.dst && a.seqn == b.seqn &&
           a.ack_requested == b.ack_requested && a.header_type == b.header_type && a.payload == b.payload;
  }
};

class WireError : public std::runtime_error {
 public:
  enum class Kind { Oversize, Crc, Structural };
  WireError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// XOR fold of all bytes, seeded with 0xFF.
std::uint8_t checksum(std::span<const std::uint8_t> bytes);

Bytes encode_payload(const CommandPayload& payload);
CommandPayload decode_payload(std::span<const std::uint8_t> bytes);

Bytes encode_frame(const MacFrame& frame);
MacFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Short display name used in traces, e.g. "S0NonceGet".
std::string payload_name(const CommandPayload& payload);

/// Builds a singlecast frame with the ack bit set.
MacFrame make_frame(HomeId home, NodeId src, NodeId dst, CommandPayload payload, std::uint8_t seqn = 0);

/// MacAck frame answering `to`.
MacFrame make_ack(HomeId home, NodeId src, NodeId to, std::uint8_t seqn = 0);

}  // namespace zwsim::wire
