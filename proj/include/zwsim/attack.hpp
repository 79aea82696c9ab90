#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zwsim/network.hpp"
#include "zwsim/wire.hpp"

namespace zwsim::attack {

using namespace std::chrono_literals;

/// Half-open id range [first, last).
struct IdRange {
  int first = 2;
  int last = 233;

  bool contains(int id) const { return id >= first && id < last; }
  std::vector<NodeId> ids() const;
};

wire::MacFrame spoofed_s0_nonce_get(HomeId home, NodeId spoofed_src);
wire::MacFrame spoofed_s2_nonce_get(HomeId home, NodeId spoofed_src, NodeId dst = NodeId::controller());

struct DosPlan {
  std::vector<NodeId> spoofed;  // used round-robin
  SimTime duration = 100s;
  SimTime gap = 1s;
  /// 1-based iteration after which the desync burst fires; nullopt disables it.
  std::optional<unsigned> desync_at_iteration = 1;
  IdRange desync_range{6, 232};
};

/// Number of NonceGet frames the plan sends.
std::uint64_t dos_iterations(const DosPlan& plan);

/// Schedules the flood on `net` starting at `start`.
void send_dos(Network& net, const DosPlan& plan, SimTime start);

/// Schedules one spoofed S2NonceGet per id in `range`, all at `at`.
void desync_all(Network& net, IdRange range, SimTime at, NodeId claimed_dst = NodeId::controller());

enum class Liveness { Responding, Silent };
std::string to_string(Liveness l);

struct DiscoveryConfig {
  IdRange ids{2, 233};
  /// Gap after each probe; its size is the number of repeats.
  std::vector<SimTime> gaps{1s, 1s, 3s};
};

/// Probes every id with spoofed S0NonceGets starting at the network's current
/// time, runs the network to the end of the sweep and classifies each id.
std::map<NodeId, Liveness> find_online_nodes(Network& net, const DiscoveryConfig& config = {});

/// Runs the network for `window` and returns the ids seen sending their own
/// frames (controller and attacker excluded).
std::set<NodeId> observe_traffic(Network& net, SimTime window = 60s);

std::set<NodeId> identify_failed(const std::set<NodeId>& responding, const std::set<NodeId>& observed_traffic);

std::set<NodeId> responding_ids(const std::map<NodeId, Liveness>& classification);

struct Budget {
  std::uint64_t frames = 0;
  SimTime per{};
};

Budget worst_case_budget(unsigned included_count, SimTime timeout);
std::string format_budget(const Budget& b);

}  // namespace zwsim::attack
