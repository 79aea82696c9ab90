// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "../support/hex.hpp"
#include "../support/openssl_oracle.hpp"
#include "zwsim/attack.hpp"
#include "zwsim/crypto.hpp"
#include "zwsim/scenario.hpp"
#include "zwsim/sniff.hpp"

using namespace zwsim;
using namespace std::chrono_literals;
namespace sc = zwsim::scenario;

namespace {

constexpr double kDrainTolerance = 0.02;       // seconds, simulated
constexpr double kDiscoveryTolerance = 0.01;   // absolute, on the per-id rate
constexpr double kDiscoveryFloor = 0.97;
constexpr int kDiscoveryTrials = 10000;
constexpr int kCryptoCases = 1000;

const std::filesystem::path kDir = ZWSIM_SCENARIO_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

sc::Scenario bundled(const std::string& name) { return sc::load_scenario(sc::resolve_scenario(name, kDir)); }

attack::DosPlan& dos_plan(sc::Scenario& s) {
  for (auto& a : s.timeline)
    if (auto* d = std::get_if<sc::DosAction>(&a.action)) return d->plan;
  throw std::logic_error("scenario has no dos action");
}

std::string sha256(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  return testhex::str(std::span<const std::uint8_t>(md, len));
}

NetworkConfig ring_topology() {
  NetworkConfig cfg;
  cfg.home = HomeId{0xE17E329C};
  cfg.devices = {{nodes::NodeSpec{NodeId{3}, SecurityClass::S0, nodes::NodeStatus::Alive, true}},
                 {nodes::NodeSpec{NodeId{14}, SecurityClass::S2, nodes::NodeStatus::Failed, true}},
                 {nodes::NodeSpec{NodeId{15}, SecurityClass::S2, nodes::NodeStatus::Alive, true}, true},
                 {nodes::NodeSpec{NodeId{17}, SecurityClass::S2, nodes::NodeStatus::Alive, true}, true}};
  return cfg;
}

Outcome blocking() {
  const auto r = sc::run(bundled("ring_poc"), 1).report;
  const bool ok = r.events_triggered == 3 && r.events_delivered_in_attack_window == 0 && r.attacker_frames_sent > 0;
  return {ok, fmt::format("triggered={} delivered_in_window={} recovered_after={}", r.events_triggered,
                          r.events_delivered_in_attack_window, r.events_delivered)};
}

Outcome minimal_rate() {
  std::string detail;
  bool ok = true;
  for (const auto gap : {1500ms, 2000ms}) {
    auto s = bundled("minimal_rate");
    dos_plan(s).gap = gap;
    const auto r = sc::run(s, 1).report;
    ok = ok && s.network.nonce_timeout == 3s && r.events_triggered > 0 && r.events_delivered_in_attack_window == 0;
    detail += fmt::format("gap={:.1f}s delivered_in_window={} ", to_seconds(gap), r.events_delivered_in_attack_window);
  }
  return {ok, detail};
}

Outcome drain() {
  std::string detail;
  bool ok = true;
  for (const int n : {3, 5, 10}) {
    auto cfg = ring_topology();
    Network net(cfg);
    attack::DosPlan plan;
    plan.spoofed = {NodeId{14}};
    plan.duration = SimTime{n * 1000};
    plan.desync_at_iteration.reset();
    attack::send_dos(net, plan, 0s);
    net.trigger_event(NodeId{3}, Bytes{0xFF}, 500ms);
    net.run_until(400s);
    net.check_invariants();

    // Last NonceReport issued up to the moment the attacker stops.
    const auto& trace = net.medium().trace();
    const auto stop = trace.at(net.attacker_lines().back()).time;
    std::optional<SimTime> last_report;
    for (const auto& rec : trace.records())
      if (rec.command == "S0NonceReport" && rec.time <= stop) last_report = rec.time;
    if (!last_report || net.deliveries().empty()) return {false, fmt::format("n={} no report or no delivery", n)};

    const double expected = to_seconds(*last_report) + n * to_seconds(cfg.nonce_timeout);
    const double got = to_seconds(net.deliveries().front().at);
    const bool this_ok = std::abs(got - expected) <= kDrainTolerance + 1e-9;
    ok = ok && this_ok;
    detail += fmt::format("n={} expected={:.3f} got={:.3f} ", n, expected, got);
  }
  return {ok, detail};
}

Outcome one_escape() {
  const auto r = sc::run(bundled("s2_one_escape"), 1).report;

  // Same flood, but the attacker also desyncs node 15 before its first event.
  auto s = bundled("s2_one_escape");
  s.timeline.push_back(sc::TimedAction{1s, sc::DesyncAction{attack::IdRange{15, 16}}, 0});
  std::ranges::stable_sort(s.timeline, {}, &sc::TimedAction::at);
  const auto d = sc::run(s, 1).report;

  const bool ok = r.events_triggered == 2 && r.events_delivered_in_attack_window == 1 &&
                  d.events_delivered_in_attack_window == 0;
  return {ok, fmt::format("synced delivered_in_window={} after_desync delivered_in_window={}",
                          r.events_delivered_in_attack_window, d.events_delivered_in_attack_window)};
}

Outcome desync() {
  // Flood plus desync over [6,20): the S2 nodes get nothing through.
  Network flooded(ring_topology());
  attack::DosPlan plan;
  plan.spoofed = {NodeId{14}};
  plan.desync_at_iteration.reset();
  attack::send_dos(flooded, plan, 5s);
  attack::desync_all(flooded, {6, 20}, 6s);
  flooded.trigger_event(NodeId{15}, Bytes{0xFF}, 40s);
  flooded.trigger_event(NodeId{17}, Bytes{0xFF}, 70s);
  flooded.run_until(105s);
  flooded.check_invariants();
  const auto s2_during = std::ranges::count_if(flooded.deliveries(), [](const auto& d) { return d.via == SecurityClass::S2; });

  // No flood: desync, then one event needs one resync report and two tries.
  Network quiet(ring_topology());
  attack::desync_all(quiet, {6, 20}, 1s);
  quiet.trigger_event(NodeId{15}, Bytes{0xFF}, 5s);
  quiet.run_until(60s);
  quiet.check_invariants();
  const auto resyncs = std::ranges::count_if(quiet.medium().trace().records(), [](const auto& r) {
    return r.command == "S2NonceReport(SOS)" && r.dst == NodeId{15};
  });
  const auto attempts = quiet.device(NodeId{15})->encapsulations_sent();

  const bool ok = s2_during == 0 && quiet.deliveries().size() == 1 && resyncs == 1 && attempts == 2;
  return {ok, fmt::format("flooded_s2_delivered={} quiet_delivered={} resync_reports={} attempts={}", s2_during,
                          quiet.deliveries().size(), resyncs, attempts)};
}

Outcome discovery() {
  const std::set<NodeId> included{NodeId{3}, NodeId{14}, NodeId{15}, NodeId{17}};
  std::map<NodeId, int> hits;
  int false_positives = 0;
  for (int trial = 0; trial < kDiscoveryTrials; ++trial) {
    auto cfg = ring_topology();
    cfg.medium.crc_corruption_probability = 0.3;
    cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
    Network net(cfg);
    for (const auto& [id, l] : attack::find_online_nodes(net)) {
      if (l != attack::Liveness::Responding) continue;
      if (included.contains(id))
        ++hits[id];
      else
        ++false_positives;
    }
  }
  const double target = 1 - 0.3 * 0.3 * 0.3;
  bool ok = false_positives == 0;
  double pooled = 0;
  std::string detail;
  for (const auto id : included) {
    const double rate = static_cast<double>(hits[id]) / kDiscoveryTrials;
    pooled += rate / included.size();
    ok = ok && rate >= kDiscoveryFloor && std::abs(rate - target) <= kDiscoveryTolerance;
    detail += fmt::format("id{}={:.4f} ", id.value(), rate);
  }
  ok = ok && pooled >= kDiscoveryFloor;
  return {ok, detail + fmt::format("pooled={:.4f} target={:.4f} silent_ids_misreported={}", pooled, target,
                                   false_positives)};
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(ZWSIM_CLI_PATH) + " " + args;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {};
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  ::pclose(p);
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

Outcome budget() {
  const auto a = run_cli("budget --nodes 231 --timeout 3");
  const auto b = run_cli("budget --nodes 1 --timeout 3");
  return {a == "462 frames per 3 s" && b == "2 frames per 3 s", fmt::format("'{}' / '{}'", a, b)};
}

Outcome timer_bounds() {
  auto text = [](const std::string& timeout, double gap) {
    return fmt::format(R"([network]
home = 0xE17E329C
timeout = {}
node 3 S0 alive
node 14 S2 failed
node 15 S2 alive synced
node 17 S2 alive synced
[timeline]
at 5 dos src=14 duration=100 gap={} desync_at=1 desync_range=6..232
at 10 trigger 3
at 40 trigger 15
at 70 trigger 17
run_until 2500
)",
                       timeout, gap);
  };
  bool ok = true;
  std::string detail;
  for (const auto bad : {"2", "21"}) {
    bool rejected = false;
    try {
      sc::parse_scenario(text(bad, 1), "bounds");
    } catch (const sc::ScenarioError&) {
      rejected = true;
    }
    ok = ok && rejected;
    detail += fmt::format("T={} {} ", bad, rejected ? "rejected" : "ACCEPTED");
  }
  for (const int t : {3, 10, 20}) {
    const auto s = sc::parse_scenario(text(std::to_string(t), t - 0.5), "bounds");
    const auto r = sc::run(s, 1).report;
    const bool blocked = r.events_triggered == 3 && r.events_delivered_in_attack_window == 0;
    ok = ok && blocked;
    detail += fmt::format("T={} delivered_in_window={} ", t, r.events_delivered_in_attack_window);
  }
  return {ok, detail};
}

Outcome crypto_properties() {
  std::array<std::uint8_t, 32> zero{};
  auto st = crypto::ctr_drbg_instantiate(zero);
  const bool kat = testhex::str(crypto::ctr_drbg_generate_block(st)) == "d40e25d386f068ba00cd8671f3478932" &&
                   testhex::str(crypto::ctr_drbg_generate_block(st)) == "bc6f12b1fb5943742ddfc0392c94f993";

  crypto::Prng p(2024);
  int drbg_mismatch = 0;
  for (int i = 0; i < 20; ++i) {
    const auto e = p.bytes<32>();
    auto mine = crypto::ctr_drbg_instantiate(e);
    oracle::CtrDrbg ref(e);
    for (int k = 0; k < 4; ++k)
      if (crypto::ctr_drbg_generate_block(mine) != ref.generate()) ++drbg_mismatch;
  }

  int failures = 0;
  for (int i = 0; i < kCryptoCases; ++i) {
    const auto keys = crypto::derive_keys(p.bytes<16>());
    const auto iv = crypto::make_iv(crypto::generate_s0_nonce(p), crypto::generate_s0_nonce(p));
    Bytes plain(1 + p.next_u64() % 30);
    for (auto& b : plain) b = p.next_byte();
    const crypto::MacHeader h{NodeId{3}, NodeId::controller(), wire::kS0MsgEncap};
    const auto ct = crypto::s0_encrypt(keys.encryption_key, iv, plain);
    const auto tag = crypto::s0_mac(keys.authentication_key, iv, h, ct);
    if (crypto::s0_encrypt(keys.encryption_key, iv, ct) != plain) ++failures;
    auto flipped = ct;
    const auto bit = p.next_u64() % (flipped.size() * 8);
    flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    if (crypto::s0_mac(keys.authentication_key, iv, h, flipped) == tag) ++failures;
  }
  return {kat && drbg_mismatch == 0 && failures == 0,
          fmt::format("kat={} drbg_vs_openssl_mismatches={} s0_failures={}/{}", kat ? "ok" : "bad", drbg_mismatch,
                      failures, kCryptoCases)};
}

Outcome determinism() {
  bool ok = true;
  std::string detail;
  for (const auto name : {"ring_poc", "minimal_rate", "s2_one_escape", "all_ids_fallback", "drain_only", "long_attack"}) {
    const auto s = bundled(name);
    const auto a = sha256(sniff::to_csv(sc::run(s, 42).trace));
    const auto b = sha256(sniff::to_csv(sc::run(s, 42).trace));
    ok = ok && a == b;
    detail += fmt::format("{}={} ", name, a == b ? a.substr(0, 8) : "MISMATCH");
  }
  return {ok, detail};
}

Outcome unbounded() {
  const auto s = bundled("long_attack");
  const auto r = sc::run(s, 1).report;
  const auto attack_len = *r.attack_end - *r.attack_start;
  const bool ok = attack_len >= 1799s && r.blocked_interval && *r.blocked_interval >= 1800s &&
                  r.max_queue_depth <= s.network.queue_capacity && r.events_delivered == r.events_triggered;
  return {ok, fmt::format("attack={:.0f}s blocked_interval={:.3f}s max_queue={}/{} dropped_requests={}",
                          to_seconds(attack_len), r.blocked_interval ? to_seconds(*r.blocked_interval) : -1.0,
                          r.max_queue_depth, s.network.queue_capacity, r.queue_overflows)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 blocking", blocking},
      {"2 minimal rate", minimal_rate},
      {"3 drain arithmetic", drain},
      {"4 s2 one escape", one_escape},
      {"5 desync", desync},
      {"6 discovery", discovery},
      {"7 budget", budget},
      {"8 timer bounds", timer_bounds},
      {"9 crypto", crypto_properties},
      {"10 determinism", determinism},
      {"11 unbounded blocking", unbounded},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("{} criterion {}: {}", o.pass ? "PASS" : "FAIL", name, o.detail) << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
