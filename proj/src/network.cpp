#include "zwsim/network.hpp"

#include <fmt/format.h>

namespace zwsim {
namespace {

std::vector<nodes::NodeSpec> specs_of(const std::vector<DeviceSetup>& devices) {
  std::vector<nodes::NodeSpec> out;
  out.reserve(devices.size());
  for (const auto& d : devices) out.push_back(d.spec);
  return out;
}

constexpr std::uint64_t kControllerStream = 1;
constexpr std::uint64_t kSpanSetupStream = 2;
constexpr std::uint64_t kDeviceStreamBase = 0x100;

}  // namespace

class Network::ControllerPort final : public medium::Endpoint {
 public:
  explicit ControllerPort(Network& net) : net_(net) {}
  void on_frame(const wire::MacFrame& frame, std::uint64_t line, SimTime now) override {
    net_.apply(NodeId::controller(), net_.controller_.on_frame(frame, now, line), line);
  }
  void on_timer(std::uint64_t token, SimTime now) override {
    net_.apply(NodeId::controller(), net_.controller_.on_timer(token, now), std::nullopt);
  }
  void on_trigger(Bytes, SimTime) override {}

 private:
  Network& net_;
};

class Network::DevicePort final : public medium::Endpoint {
 public:
  DevicePort(Network& net, nodes::Device& device) : net_(net), device_(device) {}
  void on_frame(const wire::MacFrame& frame, std::uint64_t line, SimTime now) override {
    net_.apply(device_.id(), device_.on_frame(frame, now), line);
  }
  void on_timer(std::uint64_t token, SimTime now) override {
    net_.apply(device_.id(), device_.on_timer(token, now), std::nullopt);
  }
  void on_trigger(Bytes payload, SimTime now) override {
    ++net_.events_triggered_;
    net_.apply(device_.id(), device_.trigger_event(std::move(payload), now), std::nullopt);
  }

 private:
  Network& net_;
  nodes::Device& device_;
};

Network::Network(NetworkConfig config)
    : config_(std::move(config)),
      keys_(crypto::derive_keys(config_.network_key)),
      medium_([&] {
        auto m = config_.medium;
        m.seed = config_.seed;
        return m;
      }()),
      controller_(nodes::ControllerConfig{config_.home, config_.nonce_timeout, config_.queue_capacity, keys_,
                                          crypto::derive_seed(config_.seed, kControllerStream)},
                  specs_of(config_.devices)) {
  crypto::Prng span_setup(crypto::derive_seed(config_.seed, kSpanSetupStream));
  for (const auto& d : config_.devices) {
    nodes::DeviceConfig dc;
    dc.spec = d.spec;
    dc.home = config_.home;
    dc.keys = keys_;
    dc.seed = crypto::derive_seed(config_.seed, kDeviceStreamBase + d.spec.id.value());
    dc.retry_interval = config_.retry_interval;
    dc.max_retries = config_.max_retries;
    dc.nonce_request_timeout = config_.nonce_request_timeout;
    auto [it, _] = devices_.emplace(d.spec.id, nodes::Device(dc));
    if (d.span_synced) {
      if (d.spec.security != SecurityClass::S2)
        throw std::invalid_argument(fmt::format("node {} is S0 and cannot start with a SPAN", d.spec.id.value()));
      const auto entropy = span_setup.bytes<32>();
      it->second.establish_span(entropy);
      controller_.establish_span(d.spec.id, entropy);
    }
  }

  controller_port_ = std::make_unique<ControllerPort>(*this);
  medium_.attach(NodeId::controller(), *controller_port_);
  for (auto& [id, dev] : devices_) {
    auto port = std::make_unique<DevicePort>(*this, dev);
    medium_.attach(id, *port);
    device_ports_.emplace(id, std::move(port));
  }
}

Network::~Network() = default;

nodes::Device* Network::device(NodeId id) {
  auto it = devices_.find(id);
  return it == devices_.end() ? nullptr : &it->second;
}

void Network::trigger_event(NodeId node, Bytes payload, SimTime at) {
  if (!devices_.contains(node)) throw std::invalid_argument(fmt::format("no device with node id {}", node.value()));
  medium_.schedule(at, medium::TriggerEvent{node, std::move(payload)});
}

void Network::fail_node(NodeId node, SimTime at) {
  auto* dev = device(node);
  if (!dev) throw std::invalid_argument(fmt::format("no device with node id {}", node.value()));
  medium_.schedule(at, medium::ActionEvent{[dev](SimTime) { dev->fail(); }});
}

void Network::at(SimTime when, std::function<void(SimTime)> action) {
  medium_.schedule(when, medium::ActionEvent{std::move(action)});
}

std::uint64_t Network::attacker_transmit(const wire::MacFrame& frame) {
  const auto line = medium_.transmit(frame, medium::Origin::Attacker, "spoofed");
  attacker_lines_.push_back(line);
  attacker_line_set_.insert(line);
  return line;
}

void Network::apply(NodeId node, nodes::Reaction r, std::optional<std::uint64_t> line) {
  if (line) {
    if (r.status)
      medium_.trace().annotate(*line, *r.status, r.note);
    else if (!r.note.empty())
      medium_.trace().append_note(*line, r.note);
  }
  if (r.delivered) deliveries_.push_back(DeliveryRecord{r.delivered->from, r.delivered->at, r.delivered->via, line.value_or(0)});
  if (r.issued) issues_.push_back(IssueRecord{*r.issued, attacker_line_set_.contains(r.issued->request_ref)});
  if (r.timer) medium_.schedule(r.timer->at, medium::TimerEvent{node, r.timer->token});
  if (!node.is_controller()) {
    const auto* dev = device(node);
    if (!dev || !dev->alive()) return;  // failed nodes never transmit
  }
  for (const auto& f : r.frames) {
    std::string note;
    // Tie each issued nonce to the request it answers so the trace alone
    // is enough to rebuild the report.
    if (r.issued && f.dst == r.issued->to && std::holds_alternative<wire::S0NonceReport>(f.payload))
      note = fmt::format("answers line {}", r.issued->request_ref);
    medium_.transmit(f, medium::Origin::Node, std::move(note));
  }
}

medium::SimReport Network::run_until(SimTime t_end) { return medium_.run_until(t_end); }

void Network::check_invariants() const {
  const auto& c = medium_.counters();
  if (c.frames_sent != c.frames_delivered + c.frames_lost + c.frames_corrupted)
    throw InvariantViolation("frame conservation broken");

  const auto& recs = medium_.trace().records();
  if (recs.size() != c.frames_sent) throw InvariantViolation("trace is missing transmissions");
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].line_no != recs[i - 1].line_no + 1) throw InvariantViolation("trace line numbers not consecutive");
    if (recs[i].time < recs[i - 1].time) throw InvariantViolation("trace time decreased");
  }

  if (controller_.max_queue_depth() > config_.queue_capacity) throw InvariantViolation("queue exceeded capacity");

  for (std::size_t i = 0; i < issues_.size(); ++i) {
    const auto& is = issues_[i].issue;
    const auto life = is.deadline - is.issued;
    if (life < nodes::kMinNonceTimeout || life > nodes::kMaxNonceTimeout)
      throw InvariantViolation("nonce lifetime outside 3-20 s");
    // Single slot: a new nonce is only issued once the previous one is gone.
    if (i > 0 && is.issued < issues_[i - 1].issue.issued) throw InvariantViolation("nonce issues out of order");
  }
}

}  // namespace zwsim
