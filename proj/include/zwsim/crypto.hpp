#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "zwsim/types.hpp"
#include "zwsim/wire.hpp"

namespace zwsim::crypto {

using Block = std::array<std::uint8_t, 16>;
using Key128 = std::array<std::uint8_t, 16>;

/// AES-128 block encryption. Only the forward direction is needed: OFB,
/// CBC-MAC and CTR_DRBG never decrypt a block.
class Aes128 {
 public:
  explicit Aes128(const Key128& key);
  Block encrypt(const Block& in) const;

 private:
  std::array<std::uint8_t, 176> round_keys_{};
};

/// SplitMix64 byte stream. Same seed gives the same stream on every platform.
class Prng {
 public:
  explicit Prng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) built from the top 53 bits.
  double next_unit();
  std::uint8_t next_byte();
  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    for (auto& b : out) b = next_byte();
    return out;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t buffer_ = 0;
  unsigned buffered_ = 0;
  std::uint64_t position_ = 0;
};

/// Mixes a base seed with a stream label so sibling generators are independent.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label);

struct NetworkKeys {
  Key128 network_key{};
  Key128 encryption_key{};
  Key128 authentication_key{};
};

/// KE = AES(K, 0xAA..), KA = AES(K, 0x55..).
NetworkKeys derive_keys(const Key128& network_key);

struct S0Nonce {
  wire::Nonce8 bytes{};
  std::uint8_t id() const { return bytes[0]; }
  friend bool operator==(const S0Nonce&, const S0Nonce&) = default;
};

S0Nonce generate_s0_nonce(Prng& prng);

/// IV = sender nonce || receiver nonce.
Block make_iv(const S0Nonce& sender, const S0Nonce& receiver);

/// AES-128-OFB keystream; applying it twice with the same IV restores the input.
Bytes s0_encrypt(const Key128& encryption_key, const Block& iv, std::span<const std::uint8_t> data);

struct MacHeader {
  NodeId src;
  NodeId dst;
  std::uint8_t command = 0;
};

/// CBC-MAC chained from the IV over command | src | dst | length | ciphertext,
/// zero padded to whole blocks, truncated to 8 bytes. The rest of the frame
/// (home id, flags, sequence number) is not covered.
wire::Tag8 s0_mac(const Key128& authentication_key, const Block& iv, const MacHeader& header,
                  std::span<const std::uint8_t> ciphertext);

/// NIST SP 800-90A CTR_DRBG, AES-128, no derivation function, no
/// personalization, no reseed.
struct CtrDrbgState {
  Key128 key{};
  Block counter_v{};
  std::uint64_t generate_count = 0;
  friend bool operator==(const CtrDrbgState&, const CtrDrbgState&) = default;
};

inline constexpr std::size_t kDrbgSeedLength = 32;
inline constexpr std::size_t kSpanNonceLength = 13;

using SpanNonce = std::array<std::uint8_t, kSpanNonceLength>;

/// Throws std::invalid_argument unless `entropy` is exactly 32 bytes.
CtrDrbgState ctr_drbg_instantiate(std::span<const std::uint8_t> entropy);

/// One full 16-byte generate call (update with zero additional input).
Block ctr_drbg_generate_block(CtrDrbgState& state);

/// Next SPAN nonce: first 13 bytes of one generate block.
SpanNonce ctr_drbg_generate(CtrDrbgState& state);

/// sender half || receiver half.
std::array<std::uint8_t, 32> span_entropy(const wire::Entropy16& sender_half, const wire::Entropy16& receiver_half);

/// S2 payload protection as modelled here: OFB keystream under KE with
/// IV = span nonce || 000, plus an 8-byte CBC-MAC under KA. It opens
/// correctly iff both peers used the same span nonce.
struct S2Sealed {
  Bytes ciphertext;
  wire::Tag8 tag{};
};

S2Sealed s2_seal(const NetworkKeys& keys, const SpanNonce& nonce, const MacHeader& header,
                 std::span<const std::uint8_t> plaintext);

std::optional<Bytes> s2_open(const NetworkKeys& keys, const SpanNonce& nonce, const MacHeader& header,
                             std::span<const std::uint8_t> ciphertext, const wire::Tag8& tag);

}  // namespace zwsim::crypto
