#include <doctest.h>

#include "zwsim/attack.hpp"
#include "zwsim/network.hpp"

using namespace zwsim;
using namespace zwsim::attack;
using namespace std::chrono_literals;

namespace {

const HomeId kHome{0xE17E329C};

NetworkConfig demo_network() {
  NetworkConfig cfg;
  cfg.home = kHome;
  cfg.devices = {{nodes::NodeSpec{NodeId{3}, SecurityClass::S0, nodes::NodeStatus::Alive, true}},
                 {nodes::NodeSpec{NodeId{14}, SecurityClass::S2, nodes::NodeStatus::Failed, true}},
                 {nodes::NodeSpec{NodeId{15}, SecurityClass::S2, nodes::NodeStatus::Alive, true}, true},
                 {nodes::NodeSpec{NodeId{17}, SecurityClass::S2, nodes::NodeStatus::Alive, true}, true}};
  return cfg;
}

std::set<NodeId> ids(std::initializer_list<int> v) {
  std::set<NodeId> out;
  for (int i : v) out.insert(NodeId{i});
  return out;
}

}  // namespace

TEST_CASE("spoofed frames look like the real node's") {
  const auto f = spoofed_s0_nonce_get(kHome, NodeId{14});
  CHECK(f.src == NodeId{14});
  CHECK(f.dst == NodeId::controller());
  CHECK(f.ack_requested);
  CHECK(std::holds_alternative<wire::S0NonceGet>(f.payload));
  const auto g = spoofed_s2_nonce_get(kHome, NodeId{17});
  CHECK(std::holds_alternative<wire::S2NonceGet>(g.payload));
  CHECK(g.dst == NodeId::controller());
}

TEST_CASE("discovery on a lossless medium") {
  NetworkConfig cfg;
  cfg.home = kHome;
  cfg.devices = {{nodes::NodeSpec{NodeId{3}, SecurityClass::S0, nodes::NodeStatus::Alive, true}},
                 {nodes::NodeSpec{NodeId{14}, SecurityClass::S0, nodes::NodeStatus::Failed, true}}};
  Network net(cfg);
  const auto classes = find_online_nodes(net);
  REQUIRE(classes.size() == 231);
  CHECK(classes.at(NodeId{3}) == Liveness::Responding);
  CHECK(classes.at(NodeId{14}) == Liveness::Responding);
  CHECK(classes.at(NodeId{200}) == Liveness::Silent);
  // Sound and complete: responders are exactly the included ids.
  CHECK(responding_ids(classes) == ids({3, 14}));
  CHECK(net.medium().now() == 231 * 5s);
}

TEST_CASE("discovery on an empty network finds nothing") {
  NetworkConfig cfg;
  cfg.home = kHome;
  Network net(cfg);
  CHECK(responding_ids(find_online_nodes(net)).empty());
}

TEST_CASE("identify_failed") {
  CHECK(identify_failed(ids({3, 14}), ids({3})) == ids({14}));
  CHECK(identify_failed(ids({3, 14}), ids({3, 14})).empty());
  CHECK(identify_failed({}, ids({3})).empty());
}

TEST_CASE("passive observation spots live senders only") {
  Network net(demo_network());
  net.trigger_event(NodeId{3}, Bytes{0xFF}, 5s);
  net.trigger_event(NodeId{15}, Bytes{0xFF}, 20s);
  net.trigger_event(NodeId{17}, Bytes{0xFF}, 70s);  // outside the window
  const auto seen = observe_traffic(net, 60s);
  CHECK(seen == ids({3, 15}));
  const auto responding = responding_ids(find_online_nodes(net));
  CHECK(responding == ids({3, 14, 15, 17}));
  CHECK(identify_failed(responding, seen) == ids({14, 17}));
}

TEST_CASE("dos iteration count") {
  DosPlan p;
  p.spoofed = {NodeId{14}};
  CHECK(dos_iterations(p) == 100);
  p.gap = 1500ms;
  p.duration = 60s;
  CHECK(dos_iterations(p) == 40);
  p.duration = 0s;
  CHECK(dos_iterations(p) == 0);
}

TEST_CASE("zero duration sends nothing") {
  Network net(demo_network());
  DosPlan p;
  p.spoofed = {NodeId{14}};
  p.duration = 0s;
  send_dos(net, p, 1s);
  net.trigger_event(NodeId{3}, Bytes{1}, 2s);
  net.run_until(10s);
  CHECK(net.attacker_lines().empty());
  CHECK(net.deliveries().size() == 1);
}

TEST_CASE("dos fires the desync burst exactly once, after the first request") {
  Network net(demo_network());
  DosPlan p;
  p.spoofed = {NodeId{14}};
  p.duration = 10s;
  p.desync_range = {6, 20};
  send_dos(net, p, 0s);
  net.run_until(11s);
  const auto& trace = net.medium().trace();
  std::size_t s0 = 0, s2 = 0;
  for (const auto line : net.attacker_lines()) {
    const auto& r = trace.at(line);
    if (r.command == "S0NonceGet") ++s0;
    if (r.command == "S2NonceGet") ++s2;
  }
  CHECK(s0 == 10);
  CHECK(s2 == 14);
  CHECK(trace.at(net.attacker_lines()[0]).command == "S0NonceGet");
  CHECK_FALSE(net.controller().span(NodeId{15}).synced());
  CHECK_FALSE(net.controller().span(NodeId{17}).synced());
  CHECK(net.device(NodeId{15})->span().synced());
}

TEST_CASE("the attacker never sends an encapsulation") {
  Network net(demo_network());
  DosPlan p;
  p.spoofed = {NodeId{14}};
  send_dos(net, p, 0s);
  desync_all(net, {2, 233}, 50s);
  net.run_until(200s);
  for (const auto line : net.attacker_lines()) {
    const auto& cmd = net.medium().trace().at(line).command;
    CHECK((cmd == "S0NonceGet" || cmd == "S2NonceGet"));
  }
}

TEST_CASE("desync over S0-only ids changes no span") {
  Network net(demo_network());
  desync_all(net, {2, 5}, 1s);
  net.run_until(2s);
  CHECK(net.controller().span(NodeId{15}).synced());
  CHECK(net.controller().span(NodeId{17}).synced());
}

TEST_CASE("desync then silence: second attempt goes through after one resync report") {
  Network net(demo_network());
  desync_all(net, {6, 20}, 1s);
  net.trigger_event(NodeId{15}, Bytes{0xAB}, 5s);
  net.run_until(60s);
  REQUIRE(net.deliveries().size() == 1);
  CHECK(net.device(NodeId{15})->encapsulations_sent() == 2);
  std::size_t sos = 0;
  for (const auto& r : net.medium().trace().records())
    if (r.command == "S2NonceReport(SOS)" && r.dst == NodeId{15}) ++sos;
  CHECK(sos == 1);
}

TEST_CASE("blocking holds for any attack gap below the timeout") {
  crypto::Prng rng(31);
  for (const auto timeout : {3s, 10s, 20s}) {
    for (int k = 0; k < 8; ++k) {
      const SimTime gap{1 + static_cast<std::int64_t>(rng.next_u64() % (timeout.count() - 1))};
      auto cfg = demo_network();
      cfg.nonce_timeout = timeout;
      Network net(cfg);
      DosPlan p;
      p.spoofed = {NodeId{14}};
      p.gap = gap;
      p.duration = 120s;
      send_dos(net, p, 0s);
      for (int t = 1; t < 120; t += 13) net.trigger_event(NodeId{t % 3 == 0 ? 3 : (t % 3 == 1 ? 15 : 17)}, Bytes{1}, SimTime{t * 1000});
      net.run_until(120s);
      CHECK_MESSAGE(net.deliveries().size() <= 1, "timeout ", timeout.count(), " gap ", gap.count());
      // The only possible escape is a synced S2 node's first event.
      for (const auto& d : net.deliveries()) CHECK(d.via == SecurityClass::S2);
    }
  }
}

TEST_CASE("worst case budget") {
  CHECK(format_budget(worst_case_budget(231, 3s)) == "462 frames per 3 s");
  CHECK(format_budget(worst_case_budget(1, 3s)) == "2 frames per 3 s");
  CHECK(worst_case_budget(0, 3s).frames == 0);
  CHECK(worst_case_budget(5, 10s).per == 10s);
  CHECK(worst_case_budget(5, 1s).per == 3s);
  CHECK_THROWS(worst_case_budget(232, 3s));
}
