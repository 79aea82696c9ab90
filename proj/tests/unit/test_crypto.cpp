#include <doctest.h>

#include <set>

#include "../support/hex.hpp"
#include "../support/openssl_oracle.hpp"
#include "zwsim/crypto.hpp"

using namespace zwsim;
using namespace zwsim::crypto;

namespace {

Key128 random_key(Prng& p) { return p.bytes<16>(); }

Bytes random_bytes(Prng& p, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = p.next_byte();
  return out;
}

}  // namespace

TEST_CASE("aes128 matches FIPS-197 appendix C.1") {
  const Aes128 aes(testhex::arr<16>("000102030405060708090a0b0c0d0e0f"));
  CHECK(testhex::str(aes.encrypt(testhex::arr<16>("00112233445566778899aabbccddeeff"))) ==
        "69c4e0d86a7b0430d8cdb78070b4c55a");
}

TEST_CASE("aes128 agrees with openssl on random blocks") {
  Prng p(11);
  for (int i = 0; i < 500; ++i) {
    const auto key = random_key(p);
    const auto in = p.bytes<16>();
    REQUIRE(Aes128(key).encrypt(in) == oracle::aes128_ecb(key, in));
  }
}

TEST_CASE("s0_encrypt is AES-128-OFB") {
  Prng p(12);
  for (int i = 0; i < 300; ++i) {
    const auto key = random_key(p);
    const Block iv = p.bytes<16>();
    const auto data = random_bytes(p, p.next_u64() % 48);
    REQUIRE(s0_encrypt(key, iv, data) == oracle::aes128_ofb(key, iv, data));
  }
}

TEST_CASE("s0_mac is CBC-MAC from the IV over the padded header and ciphertext") {
  Prng p(13);
  for (int i = 0; i < 300; ++i) {
    const auto key = random_key(p);
    const Block iv = p.bytes<16>();
    const auto ct = random_bytes(p, 1 + p.next_u64() % 40);
    const MacHeader h{NodeId{static_cast<int>(2 + p.next_u64() % 200)}, NodeId::controller(), wire::kS0MsgEncap};

    Bytes data{h.command, h.src.value(), h.dst.value(), static_cast<std::uint8_t>(ct.size())};
    data.insert(data.end(), ct.begin(), ct.end());
    data.resize((data.size() + 15) / 16 * 16, 0);
    const auto last = oracle::aes128_cbc_last(key, iv, data);

    const auto tag = s0_mac(key, iv, h, ct);
    REQUIRE(std::equal(tag.begin(), tag.end(), last.begin()));
  }
}

TEST_CASE("derived keys") {
  SUBCASE("they are AES of the fixed patterns") {
    const Key128 k = testhex::arr<16>("0102030405060708090a0b0c0d0e0f10");
    const auto keys = derive_keys(k);
    Block aa, fives;
    aa.fill(0xAA);
    fives.fill(0x55);
    CHECK(keys.network_key == k);
    CHECK(keys.encryption_key == oracle::aes128_ecb(k, aa));
    CHECK(keys.authentication_key == oracle::aes128_ecb(k, fives));
  }
  SUBCASE("KE and KA differ for 1000 random keys") {
    Prng p(14);
    for (int i = 0; i < 1000; ++i) {
      const auto keys = derive_keys(random_key(p));
      REQUIRE(keys.encryption_key != keys.authentication_key);
    }
  }
}

TEST_CASE("make_iv concatenates sender then receiver nonce") {
  const S0Nonce s{testhex::arr<8>("0001020304050607")};
  const S0Nonce r{testhex::arr<8>("08090a0b0c0d0e0f")};
  CHECK(testhex::str(make_iv(s, r)) == "000102030405060708090a0b0c0d0e0f");
  CHECK(r.id() == 0x08);
}

TEST_CASE("s0 round trip and single-bit flips over 1000 random cases") {
  Prng p(15);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto keys = derive_keys(random_key(p));
    const auto sender = generate_s0_nonce(p);
    const auto receiver = generate_s0_nonce(p);
    const auto iv = make_iv(sender, receiver);
    const auto plain = random_bytes(p, 1 + p.next_u64() % 30);
    const MacHeader h{NodeId{3}, NodeId::controller(), wire::kS0MsgEncap};

    const auto ct = s0_encrypt(keys.encryption_key, iv, plain);
    const auto tag = s0_mac(keys.authentication_key, iv, h, ct);
    if (s0_encrypt(keys.encryption_key, iv, ct) != plain) ++failures;
    if (s0_mac(keys.authentication_key, iv, h, ct) != tag) ++failures;

    auto flipped = ct;
    const auto bit = p.next_u64() % (flipped.size() * 8);
    flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    if (s0_mac(keys.authentication_key, iv, h, flipped) == tag) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("ctr_drbg known answers") {
  SUBCASE("all-zero entropy") {
    std::array<std::uint8_t, 32> e{};
    auto st = ctr_drbg_instantiate(e);
    CHECK(testhex::str(st.key) == "58e2fccefa7e3061367f1d57a4e7455a");
    CHECK(testhex::str(st.counter_v) == "0388dace60b6a392f328c2b971b2fe78");
    CHECK(testhex::str(ctr_drbg_generate_block(st)) == "d40e25d386f068ba00cd8671f3478932");
    CHECK(testhex::str(ctr_drbg_generate_block(st)) == "bc6f12b1fb5943742ddfc0392c94f993");
    CHECK(st.generate_count == 2);
  }
  SUBCASE("entropy 00..1f") {
    std::array<std::uint8_t, 32> e{};
    for (int i = 0; i < 32; ++i) e[i] = static_cast<std::uint8_t>(i);
    auto st = ctr_drbg_instantiate(e);
    CHECK(testhex::str(ctr_drbg_generate_block(st)) == "1686ffcf9f358be74452e647ba156aab");
    CHECK(testhex::str(ctr_drbg_generate_block(st)) == "8a0f6ba37bc59e9d5fd779e0064d807e");
    CHECK(testhex::str(ctr_drbg_generate_block(st)) == "b14ea32f263a990fdb43872edbe4425d");
  }
  SUBCASE("span nonce is the head of one block") {
    std::array<std::uint8_t, 32> e{};
    auto st = ctr_drbg_instantiate(e);
    const auto n = ctr_drbg_generate(st);
    CHECK(testhex::str(n) == "d40e25d386f068ba00cd8671f3");
  }
}

TEST_CASE("ctr_drbg agrees with openssl for random entropy") {
  Prng p(16);
  for (int i = 0; i < 50; ++i) {
    const auto e = p.bytes<32>();
    auto st = ctr_drbg_instantiate(e);
    oracle::CtrDrbg ref(e);
    for (int k = 0; k < 5; ++k) REQUIRE(ctr_drbg_generate_block(st) == ref.generate());
  }
}

TEST_CASE("ctr_drbg rejects entropy that is not 32 bytes") {
  const Bytes short_e(31), long_e(33);
  CHECK_THROWS_AS(ctr_drbg_instantiate(short_e), std::invalid_argument);
  CHECK_THROWS_AS(ctr_drbg_instantiate(long_e), std::invalid_argument);
}

TEST_CASE("span synchronisation") {
  Prng p(17);
  const auto e = span_entropy(p.bytes<16>(), p.bytes<16>());
  auto a = ctr_drbg_instantiate(e);
  auto b = ctr_drbg_instantiate(e);
  SUBCASE("equal entropy gives equal streams") {
    for (int i = 0; i < 100; ++i) REQUIRE(ctr_drbg_generate(a) == ctr_drbg_generate(b));
  }
  SUBCASE("one extra draw desynchronises for good") {
    ctr_drbg_generate(a);
    for (int i = 0; i < 100; ++i) REQUIRE(ctr_drbg_generate(a) != ctr_drbg_generate(b));
  }
  SUBCASE("different entropy gives a different first nonce") {
    auto c = ctr_drbg_instantiate(span_entropy(p.bytes<16>(), p.bytes<16>()));
    CHECK(ctr_drbg_generate(a) != ctr_drbg_generate(c));
  }
}

TEST_CASE("span_entropy puts the sender half first") {
  wire::Entropy16 s{}, r{};
  s.fill(1);
  r.fill(2);
  const auto e = span_entropy(s, r);
  CHECK(e[0] == 1);
  CHECK(e[15] == 1);
  CHECK(e[16] == 2);
  CHECK(e[31] == 2);
}

TEST_CASE("s2 seal opens only with the same span nonce") {
  Prng p(18);
  for (int i = 0; i < 300; ++i) {
    const auto keys = derive_keys(random_key(p));
    const auto n1 = p.bytes<13>();
    auto n2 = n1;
    n2[p.next_u64() % 13] ^= static_cast<std::uint8_t>(1 + p.next_u64() % 255);
    const MacHeader h{NodeId{15}, NodeId::controller(), wire::kS2MsgEncap};
    const auto plain = random_bytes(p, 1 + p.next_u64() % 20);
    const auto sealed = s2_seal(keys, n1, h, plain);
    const auto opened = s2_open(keys, n1, h, sealed.ciphertext, sealed.tag);
    REQUIRE(opened.has_value());
    REQUIRE(*opened == plain);
    REQUIRE_FALSE(s2_open(keys, n2, h, sealed.ciphertext, sealed.tag).has_value());
  }
}

TEST_CASE("nonces do not repeat") {
  SUBCASE("s0 nonces over 1e5 draws") {
    Prng p(19);
    std::set<wire::Nonce8> seen;
    for (int i = 0; i < 100000; ++i) REQUIRE(seen.insert(generate_s0_nonce(p).bytes).second);
  }
  SUBCASE("span nonces over 1e5 draws") {
    std::array<std::uint8_t, 32> e{};
    auto st = ctr_drbg_instantiate(e);
    std::set<SpanNonce> seen;
    for (int i = 0; i < 100000; ++i) REQUIRE(seen.insert(ctr_drbg_generate(st)).second);
  }
}

TEST_CASE("prng is reproducible and seeds are independent") {
  Prng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  Prng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.next_unit();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}
