#pragma once

// Line-oriented scenario files:
//
//   [network]
//   home = 0xE17E329C
//   timeout = 10
//   node 14 S2 failed
//   [medium]
//   crc = 0.3
//   [timeline]
//   at 5 dos src=14 duration=100 gap=1
//   at 10 trigger 3 payload=FF
//   run_until 400

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "zwsim/attack.hpp"
#include "zwsim/network.hpp"

namespace zwsim::scenario {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct TriggerAction {
  NodeId node;
  Bytes payload;
};
struct DosAction {
  attack::DosPlan plan;
};
struct DesyncAction {
  attack::IdRange range;
  NodeId claimed_dst = NodeId::controller();
};
struct FailAction {
  NodeId node;
};

struct TimedAction {
  SimTime at{};
  std::variant<TriggerAction, DosAction, DesyncAction, FailAction> action;
  int line = 0;
};

struct Scenario {
  std::string name;
  NetworkConfig network;
  std::optional<std::uint64_t> seed;  // from [medium]
  std::vector<TimedAction> timeline;
  SimTime end{};
};

Scenario parse_scenario(std::string_view text, std::string name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// Looks `name_or_path` up as a file first, then as a bundled scenario name
/// under `scenario_dir`.
std::filesystem::path resolve_scenario(const std::string& name_or_path, const std::filesystem::path& scenario_dir);

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  SimTime timeout{};
  std::uint64_t events_triggered = 0;
  std::uint64_t events_delivered = 0;
  std::uint64_t events_delivered_in_attack_window = 0;
  std::uint64_t attacker_frames_sent = 0;
  std::optional<SimTime> attack_start;
  std::optional<SimTime> attack_end;
  std::optional<SimTime> drain_end;
  std::optional<SimTime> first_post_attack_delivery;
  std::optional<SimTime> blocked_interval;
  std::optional<SimTime> backlog_drain;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t frames_lost = 0;
  std::uint64_t frames_corrupted = 0;
  std::size_t max_queue_depth = 0;
  std::uint64_t queue_overflows = 0;
  SimTime end{};
};

/// Rebuilds the trace-derived report fields from the trace rows alone.
void summarize_trace(const std::vector<sniff::TraceRecord>& trace, SimTime timeout, SimTime propagation_delay,
                     Report& report);

std::string format_report(const Report& r);

struct RunResult {
  Report report;
  std::vector<sniff::TraceRecord> trace;
};

/// Builds the network for `s`, applies its timeline and runs to `s.end`.
/// Throws InvariantViolation if the run breaks a model invariant.
RunResult run(const Scenario& s, std::uint64_t seed);

/// Seed precedence: explicit, then ZWSIM_SEED, then the scenario, then 1.
std::uint64_t pick_seed(std::optional<std::uint64_t> explicit_seed, const Scenario& s);

/// Builds a network from the scenario without scheduling its timeline.
std::unique_ptr<Network> build_network(const Scenario& s, std::uint64_t seed);

}  // namespace zwsim::scenario
