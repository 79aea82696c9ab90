#include "zwsim/crypto.hpp"

#include <algorithm>
#include <stdexcept>

namespace zwsim::crypto {
namespace {

Block filled(std::uint8_t v) {
  Block b;
  b.fill(v);
  return b;
}

void increment_be(Block& v) {
  for (auto it = v.rbegin(); it != v.rend(); ++it)
    if (++*it != 0) break;
}

void drbg_update(CtrDrbgState& s, std::span<const std::uint8_t, kDrbgSeedLength> provided) {
  const Aes128 aes(s.key);
  std::array<std::uint8_t, kDrbgSeedLength> temp{};
  for (std::size_t off = 0; off < kDrbgSeedLength; off += 16) {
    increment_be(s.counter_v);
    const Block out = aes.encrypt(s.counter_v);
    std::copy(out.begin(), out.end(), temp.begin() + static_cast<std::ptrdiff_t>(off));
  }
  for (std::size_t i = 0; i < kDrbgSeedLength; ++i) temp[i] ^= provided[i];
  std::copy_n(temp.begin(), 16, s.key.begin());
  std::copy_n(temp.begin() + 16, 16, s.counter_v.begin());
}

}  // namespace

std::uint64_t Prng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Prng::next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint8_t Prng::next_byte() {
  if (buffered_ == 0) {
    buffer_ = next_u64();
    buffered_ = 8;
  }
  const auto b = static_cast<std::uint8_t>(buffer_ & 0xFF);
  buffer_ >>= 8;
  --buffered_;
  ++position_;
  return b;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label) {
  Prng p(base ^ (label * 0xD1B54A32D192ED03ULL));
  return p.next_u64();
}

NetworkKeys derive_keys(const Key128& network_key) {
  const Aes128 aes(network_key);
  return NetworkKeys{network_key, aes.encrypt(filled(0xAA)), aes.encrypt(filled(0x55))};
}

S0Nonce generate_s0_nonce(Prng& prng) { return S0Nonce{prng.bytes<8>()}; }

Block make_iv(const S0Nonce& sender, const S0Nonce& receiver) {
  Block iv{};
  std::copy(sender.bytes.begin(), sender.bytes.end(), iv.begin());
  std::copy(receiver.bytes.begin(), receiver.bytes.end(), iv.begin() + 8);
  return iv;
}

Bytes s0_encrypt(const Key128& encryption_key, const Block& iv, std::span<const std::uint8_t> data) {
  const Aes128 aes(encryption_key);
  Bytes out(data.begin(), data.end());
  Block feedback = iv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 16 == 0) feedback = aes.encrypt(feedback);
    out[i] ^= feedback[i % 16];
  }
  return out;
}

wire::Tag8 s0_mac(const Key128& authentication_key, const Block& iv, const MacHeader& header,
                  std::span<const std::uint8_t> ciphertext) {
  Bytes data{header.command, header.src.value(), header.dst.value(), static_cast<std::uint8_t>(ciphertext.size())};
  data.insert(data.end(), ciphertext.begin(), ciphertext.end());
  data.resize((data.size() + 15) / 16 * 16, 0);

  const Aes128 aes(authentication_key);
  Block chain = iv;
  for (std::size_t off = 0; off < data.size(); off += 16) {
    for (std::size_t i = 0; i < 16; ++i) chain[i] ^= data[off + i];
    chain = aes.encrypt(chain);
  }
  wire::Tag8 tag{};
  std::copy_n(chain.begin(), tag.size(), tag.begin());
  return tag;
}

CtrDrbgState ctr_drbg_instantiate(std::span<const std::uint8_t> entropy) {
  if (entropy.size() != kDrbgSeedLength)
    throw std::invalid_argument("CTR_DRBG entropy must be exactly 32 bytes, got " + std::to_string(entropy.size()));
  CtrDrbgState s;
  drbg_update(s, entropy.first<kDrbgSeedLength>());
  return s;
}

Block ctr_drbg_generate_block(CtrDrbgState& state) {
  increment_be(state.counter_v);
  const Block out = Aes128(state.key).encrypt(state.counter_v);
  static constexpr std::array<std::uint8_t, kDrbgSeedLength> kZero{};
  drbg_update(state, kZero);
  ++state.generate_count;
  return out;
}

SpanNonce ctr_drbg_generate(CtrDrbgState& state) {
  const Block block = ctr_drbg_generate_block(state);
  SpanNonce nonce{};
  std::copy_n(block.begin(), nonce.size(), nonce.begin());
  return nonce;
}

std::array<std::uint8_t, 32> span_entropy(const wire::Entropy16& sender_half, const wire::Entropy16& receiver_half) {
  std::array<std::uint8_t, 32> out{};
  std::copy(sender_half.begin(), sender_half.end(), out.begin());
  std::copy(receiver_half.begin(), receiver_half.end(), out.begin() + 16);
  return out;
}

namespace {
Block s2_iv(const SpanNonce& nonce) {
  Block iv{};
  std::copy(nonce.begin(), nonce.end(), iv.begin());
  return iv;
}
}  // namespace

S2Sealed s2_seal(const NetworkKeys& keys, const SpanNonce& nonce, const MacHeader& header,
                 std::span<const std::uint8_t> plaintext) {
  const Block iv = s2_iv(nonce);
  S2Sealed out;
  out.ciphertext = s0_encrypt(keys.encryption_key, iv, plaintext);
  out.tag = s0_mac(keys.authentication_key, iv, header, out.ciphertext);
  return out;
}

std::optional<Bytes> s2_open(const NetworkKeys& keys, const SpanNonce& nonce, const MacHeader& header,
                             std::span<const std::uint8_t> ciphertext, const wire::Tag8& tag) {
  const Block iv = s2_iv(nonce);
  if (s0_mac(keys.authentication_key, iv, header, ciphertext) != tag) return std::nullopt;
  return s0_encrypt(keys.encryption_key, iv, ciphertext);
}

}  // namespace zwsim::crypto
