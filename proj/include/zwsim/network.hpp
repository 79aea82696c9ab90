#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "zwsim/medium.hpp"
#include "zwsim/nodes.hpp"

namespace zwsim {

struct DeviceSetup {
  nodes::NodeSpec spec;
  /// Start with a SPAN already agreed with the controller (S2 only).
  bool span_synced = false;
};

struct NetworkConfig {
  HomeId home;
  SimTime nonce_timeout = nodes::kDefaultNonceTimeout;
  std::size_t queue_capacity = 64;
  crypto::Key128 network_key{};
  std::vector<DeviceSetup> devices;
  medium::MediumConfig medium;
  SimTime retry_interval = std::chrono::seconds(5);
  unsigned max_retries = 20;
  std::optional<SimTime> nonce_request_timeout;
  std::uint64_t seed = 1;
};

struct DeliveryRecord {
  NodeId from;
  SimTime at{};
  SecurityClass via = SecurityClass::S0;
  std::uint64_t trace_line = 0;
};

struct IssueRecord {
  nodes::NonceIssue issue;
  bool for_attacker = false;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Controller, devices and medium wired together. Frames the attacker sends
/// go through attacker_transmit so the run can tell them apart afterwards.
class Network {
 public:
  explicit Network(NetworkConfig config);
  ~Network();

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  medium::Medium& medium() { return medium_; }
  const medium::Medium& medium() const { return medium_; }
  nodes::Controller& controller() { return controller_; }
  const nodes::Controller& controller() const { return controller_; }
  nodes::Device* device(NodeId id);
  const NetworkConfig& config() const { return config_; }
  HomeId home() const { return config_.home; }

  void trigger_event(NodeId node, Bytes payload, SimTime at);
  void fail_node(NodeId node, SimTime at);
  void at(SimTime when, std::function<void(SimTime)> action);

  /// Transmits a frame built by the attacker at the current time.
  std::uint64_t attacker_transmit(const wire::MacFrame& frame);

  medium::SimReport run_until(SimTime t_end);

  const std::vector<DeliveryRecord>& deliveries() const { return deliveries_; }
  const std::vector<IssueRecord>& issues() const { return issues_; }
  const std::vector<std::uint64_t>& attacker_lines() const { return attacker_lines_; }
  std::uint64_t events_triggered() const { return events_triggered_; }

  /// Throws InvariantViolation if any model invariant was broken.
  void check_invariants() const;

 private:
  class ControllerPort;
  class DevicePort;

  void apply(NodeId node, nodes::Reaction reaction, std::optional<std::uint64_t> trace_line);

  NetworkConfig config_;
  crypto::NetworkKeys keys_;
  medium::Medium medium_;
  nodes::Controller controller_;
  std::map<NodeId, nodes::Device> devices_;
  std::unique_ptr<ControllerPort> controller_port_;
  std::map<NodeId, std::unique_ptr<DevicePort>> device_ports_;

  std::vector<DeliveryRecord> deliveries_;
  std::vector<IssueRecord> issues_;
  std::vector<std::uint64_t> attacker_lines_;
  std::set<std::uint64_t> attacker_line_set_;
  std::uint64_t events_triggered_ = 0;
};

}  // namespace zwsim
