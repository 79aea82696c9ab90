#include "zwsim/attack.hpp"

#include <algorithm>
#include <memory>

#include <fmt/format.h>

namespace zwsim::attack {

std::vector<NodeId> IdRange::ids() const {
  std::vector<NodeId> out;
  for (int i = std::max(first, 1); i < std::min(last, int{NodeId::kMax} + 1); ++i) out.emplace_back(i);
  return out;
}

wire::MacFrame spoofed_s0_nonce_get(HomeId home, NodeId spoofed_src) {
  return wire::make_frame(home, spoofed_src, NodeId::controller(), wire::S0NonceGet{});
}

wire::MacFrame spoofed_s2_nonce_get(HomeId home, NodeId spoofed_src, NodeId dst) {
  return wire::make_frame(home, spoofed_src, dst, wire::S2NonceGet{});
}

std::uint64_t dos_iterations(const DosPlan& plan) {
  if (plan.duration <= SimTime{0} || plan.spoofed.empty()) return 0;
  if (plan.gap <= SimTime{0}) throw std::invalid_argument("attack gap must be positive");
  return static_cast<std::uint64_t>((plan.duration.count() + plan.gap.count() - 1) / plan.gap.count());
}

void send_dos(Network& net, const DosPlan& plan, SimTime start) {
  const auto n = dos_iterations(plan);
  const auto home = net.home();
  for (std::uint64_t i = 0; i < n; ++i) {
    const NodeId src = plan.spoofed[i % plan.spoofed.size()];
    const bool desync = plan.desync_at_iteration && *plan.desync_at_iteration == i + 1;
    net.at(start + plan.gap * static_cast<std::int64_t>(i), [&net, home, src, desync, range = plan.desync_range](SimTime) {
      net.attacker_transmit(spoofed_s0_nonce_get(home, src));
      if (desync)
        for (const auto id : range.ids()) net.attacker_transmit(spoofed_s2_nonce_get(home, id));
    });
  }
}

void desync_all(Network& net, IdRange range, SimTime at, NodeId claimed_dst) {
  const auto home = net.home();
  net.at(at, [&net, home, range, claimed_dst](SimTime) {
    for (const auto id : range.ids()) net.attacker_transmit(spoofed_s2_nonce_get(home, id, claimed_dst));
  });
}

std::string to_string(Liveness l) { return l == Liveness::Responding ? "responding" : "silent"; }

std::map<NodeId, Liveness> find_online_nodes(Network& net, const DiscoveryConfig& config) {
  struct Window {
    SimTime from, to;
  };
  struct State {
    std::map<NodeId, Window> windows;
    std::set<NodeId> seen;
  };
  auto state = std::make_shared<State>();

  SimTime per_id{0};
  for (const auto g : config.gaps) per_id += g;

  const auto ids = config.ids.ids();
  const auto start = net.medium().now();
  const auto home = net.home();
  SimTime t = start;
  for (const auto id : ids) {
    state->windows[id] = Window{t, t + per_id};
    SimTime s = t;
    for (const auto g : config.gaps) {
      net.at(s, [&net, home, id](SimTime) { net.attacker_transmit(spoofed_s0_nonce_get(home, id)); });
      s += g;
    }
    t += per_id;
  }

  net.medium().add_tap([state](const medium::TapObservation& ob) {
    if (ob.origin != medium::Origin::Node || ob.corrupted || !ob.frame.src.is_controller()) return;
    const bool answer = std::holds_alternative<wire::MacAck>(ob.frame.payload) ||
                        std::holds_alternative<wire::S0NonceReport>(ob.frame.payload);
    if (!answer) return;
    auto it = state->windows.find(ob.frame.dst);
    if (it == state->windows.end()) return;
    if (ob.time >= it->second.from && ob.time < it->second.to) state->seen.insert(ob.frame.dst);
  });

  net.run_until(t);

  std::map<NodeId, Liveness> out;
  for (const auto id : ids) out[id] = state->seen.contains(id) ? Liveness::Responding : Liveness::Silent;
  return out;
}

std::set<NodeId> observe_traffic(Network& net, SimTime window) {
  auto seen = std::make_shared<std::set<NodeId>>();
  const auto from = net.medium().now();
  const auto to = from + window;
  net.medium().add_tap([seen, from, to](const medium::TapObservation& ob) {
    if (ob.origin != medium::Origin::Node || ob.corrupted || ob.frame.src.is_controller()) return;
    if (ob.time >= from && ob.time < to) seen->insert(ob.frame.src);
  });
  net.run_until(to);
  return *seen;
}

std::set<NodeId> identify_failed(const std::set<NodeId>& responding, const std::set<NodeId>& observed_traffic) {
  std::set<NodeId> out;
  std::ranges::set_difference(responding, observed_traffic, std::inserter(out, out.end()));
  return out;
}

std::set<NodeId> responding_ids(const std::map<NodeId, Liveness>& classification) {
  std::set<NodeId> out;
  for (const auto& [id, l] : classification)
    if (l == Liveness::Responding) out.insert(id);
  return out;
}

Budget worst_case_budget(unsigned included_count, SimTime timeout) {
  if (included_count > NodeId::kMax - 1u) throw std::invalid_argument("at most 231 ids can be included");
  return Budget{2ull * included_count, std::max<SimTime>(timeout, nodes::kMinNonceTimeout)};
}

std::string format_budget(const Budget& b) {
  return fmt::format("{} frames per {:g} s", b.frames, to_seconds(b.per));
}

}  // namespace zwsim::attack
