#include "zwsim/wire.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace zwsim::wire {
namespace {

constexpr std::uint8_t kAckRequestBit = 0x40;
constexpr std::uint8_t kHeaderTypeMask = 0x0F;
constexpr std::uint8_t kSosFlag = 0x01;
constexpr std::uint8_t kEntropyExtFlag = 0x01;

[[noreturn]] void structural(const std::string& what) {
  throw WireError(WireError::Kind::Structural, what);
}

template <std::size_t N>
void append(Bytes& out, const std::array<std::uint8_t, N>& a) {
  out.insert(out.end(), a.begin(), a.end());
}

template <std::size_t N>
std::array<std::uint8_t, N> take(std::span<const std::uint8_t> in, std::size_t offset) {
  std::array<std::uint8_t, N> a{};
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), N, a.begin());
  return a;
}

NodeId node_from_byte(std::uint8_t b, const char* field) {
  if (b < 1 || b > NodeId::kMax) structural(fmt::format("{} node id {} outside [1, 232]", field, b));
  return NodeId{b};
}

struct PayloadEncoder {
  Bytes out;

  void operator()(const S0NonceGet&) { out = {kCcSecurityS0, kS0NonceGet}; }
  void operator()(const S0NonceReport& p) {
    out = {kCcSecurityS0, kS0NonceReport};
    append(out, p.nonce);
  }
  void operator()(const S0MsgEncap& p) {
    out = {kCcSecurityS0, kS0MsgEncap};
    append(out, p.sender_nonce);
    out.insert(out.end(), p.ciphertext.begin(), p.ciphertext.end());
    out.push_back(p.receiver_nonce_id);
    append(out, p.mac);
  }
  void operator()(const S2NonceGet& p) { out = {kCcSecurityS2, kS2NonceGet, p.seqn}; }
  void operator()(const S2NonceReport& p) {
    out = {kCcSecurityS2, kS2NonceReport, static_cast<std::uint8_t>(p.sos ? kSosFlag : 0)};
    append(out, p.receiver_entropy);
  }
  void operator()(const S2MsgEncap& p) {
    out = {kCcSecurityS2, kS2MsgEncap, p.seqn,
           static_cast<std::uint8_t>(p.sender_entropy ? kEntropyExtFlag : 0)};
    if (p.sender_entropy) append(out, *p.sender_entropy);
    out.insert(out.end(), p.ciphertext.begin(), p.ciphertext.end());
    append(out, p.auth_tag);
  }
  void operator()(const AppEvent& p) {
    out = {kCcNotification};
    out.insert(out.end(), p.data.begin(), p.data.end());
  }
  void operator()(const MacAck&) { out.clear(); }
  void operator()(const UnknownPayload& p) {
    if (p.raw.empty()) structural("unknown payload must carry at least a command class byte");
    out = p.raw;
  }
};

CommandPayload decode_s0(std::span<const std::uint8_t> in) {
  switch (in[1]) {
    case kS0NonceGet:
      if (in.size() != 2) structural("S0 NonceGet carries no body");
      return S0NonceGet{};
    case kS0NonceReport:
      if (in.size() != 10) structural("S0 NonceReport needs an 8-byte nonce");
      return S0NonceReport{take<8>(in, 2)};
    case kS0MsgEncap: {
      // cc, cmd, sender nonce(8), ciphertext(n), receiver nonce id(1), mac(8)
      if (in.size() < 19) structural("S0 message encapsulation too short");
      S0MsgEncap p;
      p.sender_nonce = take<8>(in, 2);
      p.ciphertext.assign(in.begin() + 10, in.end() - 9);
      p.receiver_nonce_id = in[in.size() - 9];
      p.mac = take<8>(in, in.size() - 8);
      return p;
    }
    default:
      return UnknownPayload{Bytes(in.begin(), in.end())};
  }
}

CommandPayload decode_s2(std::span<const std::uint8_t> in) {
  switch (in[1]) {
    case kS2NonceGet:
      if (in.size() != 3) structural("S2 NonceGet carries exactly a sequence number");
      return S2NonceGet{in[2]};
    case kS2NonceReport:
      if (in.size() != 19) structural("S2 NonceReport needs flags and 16 bytes of entropy");
      return S2NonceReport{(in[2] & kSosFlag) != 0, take<16>(in, 3)};
    case kS2MsgEncap: {
      if (in.size() < 4) structural("S2 message encapsulation too short");
      S2MsgEncap p;
      p.seqn = in[2];
      std::size_t pos = 4;
      if (in[3] & kEntropyExtFlag) {
        if (in.size() < pos + 16) structural("S2 sender entropy extension truncated");
        p.sender_entropy = take<16>(in, pos);
        pos += 16;
      }
      if (in.size() < pos + 8) structural("S2 authentication tag truncated");
      p.ciphertext.assign(in.begin() + static_cast<std::ptrdiff_t>(pos), in.end() - 8);
      p.auth_tag = take<8>(in, in.size() - 8);
      return p;
    }
    default:
      return UnknownPayload{Bytes(in.begin(), in.end())};
  }
}

}  // namespace

std::uint8_t checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t c = 0xFF;
  for (auto b : bytes) c ^= b;
  return c;
}

Bytes encode_payload(const CommandPayload& payload) {
  PayloadEncoder enc;
  std::visit(enc, payload);
  return std::move(enc.out);
}

CommandPayload decode_payload(std::span<const std::uint8_t> in) {
  if (in.empty()) return MacAck{};
  if (in[0] == kCcNotification) return AppEvent{Bytes(in.begin() + 1, in.end())};
  if (in.size() >= 2 && in[0] == kCcSecurityS0) return decode_s0(in);
  if (in.size() >= 2 && in[0] == kCcSecurityS2) return decode_s2(in);
  return UnknownPayload{Bytes(in.begin(), in.end())};
}

Bytes encode_frame(const MacFrame& frame) {
  const bool is_ack = std::holds_alternative<MacAck>(frame.payload);
  if (is_ack != (frame.header_type == HeaderType::Ack))
    structural("MacAck payload and ack header type must go together");

  Bytes body = encode_payload(frame.payload);
  const std::size_t total = kHeaderSize + body.size() + 1;
  if (total > kMaxFrameSize)
    throw WireError(WireError::Kind::Oversize,
                    fmt::format("frame of {} bytes exceeds the {}-byte maximum", total, kMaxFrameSize));

  Bytes out;
  out.reserve(total);
  const auto h = frame.home.value;
  out.push_back(static_cast<std::uint8_t>(h >> 24));
  out.push_back(static_cast<std::uint8_t>(h >> 16));
  out.push_back(static_cast<std::uint8_t>(h >> 8));
  out.push_back(static_cast<std::uint8_t>(h));
  out.push_back(frame.src.value());
  out.push_back(static_cast<std::uint8_t>((frame.ack_requested ? kAckRequestBit : 0) |
                                          static_cast<std::uint8_t>(frame.header_type)));
  out.push_back(frame.seqn);
  out.push_back(static_cast<std::uint8_t>(total));
  out.push_back(frame.dst.value());
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(checksum(out));
  return out;
}

MacFrame decode_frame(std::span<const std::uint8_t> in) {
  if (in.size() < kHeaderSize + 1)
    structural(fmt::format("frame of {} bytes is shorter than the {}-byte minimum", in.size(), kHeaderSize + 1));
  if (in.size() > kMaxFrameSize)
    throw WireError(WireError::Kind::Oversize, fmt::format("frame of {} bytes exceeds maximum", in.size()));
  if (checksum(in.first(in.size() - 1)) != in.back())
    throw WireError(WireError::Kind::Crc, "checksum mismatch");
  if (in[7] != in.size())
    structural(fmt::format("length byte says {} but frame has {} bytes", in[7], in.size()));

  MacFrame f;
  f.home.value = (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
                 (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
  f.src = node_from_byte(in[4], "source");
  f.ack_requested = (in[5] & kAckRequestBit) != 0;
  switch (in[5] & kHeaderTypeMask) {
    case 0x01: f.header_type = HeaderType::Singlecast; break;
    case 0x03: f.header_type = HeaderType::Ack; break;
    default: structural(fmt::format("unsupported header type {:#x}", in[5] & kHeaderTypeMask));
  }
  f.seqn = in[6];
  f.dst = node_from_byte(in[8], "destination");

  auto body = in.subspan(kHeaderSize, in.size() - kHeaderSize - 1);
  if ((f.header_type == HeaderType::Ack) != body.empty())
    structural("ack frames carry no payload and singlecast frames need one");
  f.payload = decode_payload(body);
  f.checksum = in.back();
  return f;
}

std::string payload_name(const CommandPayload& payload) {
  struct Namer {
    std::string operator()(const S0NonceGet&) const { return "S0NonceGet"; }
    std::string operator()(const S0NonceReport&) const { return "S0NonceReport"; }
    std::string operator()(const S0MsgEncap&) const { return "S0MsgEncap"; }
    std::string operator()(const S2NonceGet&) const { return "S2NonceGet"; }
    std::string operator()(const S2NonceReport& p) const { return p.sos ? "S2NonceReport(SOS)" : "S2NonceReport"; }
    std::string operator()(const S2MsgEncap&) const { return "S2MsgEncap"; }
    std::string operator()(const AppEvent&) const { return "AppEvent"; }
    std::string operator()(const MacAck&) const { return "Ack"; }
    std::string operator()(const UnknownPayload&) const { return "Unknown"; }
  };
  return std::visit(Namer{}, payload);
}

MacFrame make_frame(HomeId home, NodeId src, NodeId dst, CommandPayload payload, std::uint8_t seqn) {
  MacFrame f;
  f.home = home;
  f.src = src;
  f.dst = dst;
  f.seqn = seqn;
  f.ack_requested = true;
  f.header_type = HeaderType::Singlecast;
  f.payload = std::move(payload);
  return f;
}

MacFrame make_ack(HomeId home, NodeId src, NodeId to, std::uint8_t seqn) {
  MacFrame f;
  f.home = home;
  f.src = src;
  f.dst = to;
  f.seqn = seqn;
  f.ack_requested = false;
  f.header_type = HeaderType::Ack;
  f.payload = MacAck{};
  return f;
}

}  // namespace zwsim::wire
