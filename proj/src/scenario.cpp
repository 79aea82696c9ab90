#include "zwsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace zwsim::scenario {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Parser {
 public:
  Parser(std::string name) : name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ScenarioError(name_, line_, msg); }

  void set_line(int line) { line_ = line; }
  int line() const { return line_; }

  double number(std::string_view v, std::string_view what) const {
    double out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(fmt::format("{}: '{}' is not a number", what, v));
    return out;
  }

  std::uint64_t unsigned_int(std::string_view v, std::string_view what, int base = 10) const {
    if (base == 16 && (v.starts_with("0x") || v.starts_with("0X"))) v.remove_prefix(2);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
      fail(fmt::format("{}: '{}' is not a non-negative integer", what, v));
    return out;
  }

  SimTime time(std::string_view v, std::string_view what) const {
    const double s = number(v, what);
    if (s < 0) fail(fmt::format("{} must not be negative", what));
    return seconds(s);
  }

  double probability(std::string_view v, std::string_view what) const {
    const double p = number(v, what);
    if (!(p >= 0.0 && p <= 1.0)) fail(fmt::format("{} {} outside [0, 1]", what, p));
    return p;
  }

  NodeId node(std::string_view v, std::string_view what) const {
    const auto n = unsigned_int(v, what);
    if (n < 1 || n > NodeId::kMax) fail(fmt::format("{} {} outside 1-232", what, n));
    return NodeId{static_cast<int>(n)};
  }

  Bytes hex(std::string_view v, std::string_view what) const {
    if (v.starts_with("0x") || v.starts_with("0X")) v.remove_prefix(2);
    if (v.size() % 2 != 0) fail(fmt::format("{}: odd number of hex digits", what));
    Bytes out;
    for (std::size_t i = 0; i < v.size(); i += 2)
      out.push_back(static_cast<std::uint8_t>(unsigned_int(v.substr(i, 2), what, 16)));
    return out;
  }

  attack::IdRange range(std::string_view v, std::string_view what) const {
    const auto dots = v.find("..");
    if (dots == std::string_view::npos) fail(fmt::format("{}: expected <first>..<last>", what));
    const auto a = unsigned_int(v.substr(0, dots), what);
    const auto b = unsigned_int(v.substr(dots + 2), what);
    if (a > b || b > NodeId::kMax + 1u) fail(fmt::format("{}: bad range {}..{}", what, a, b));
    return attack::IdRange{static_cast<int>(a), static_cast<int>(b)};
  }

 private:
  std::string name_;
  int line_ = 0;
};

using Args = std::vector<std::pair<std::string, std::string>>;

Args key_values(const Parser& p, const std::vector<std::string_view>& tokens, std::size_t from) {
  Args out;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) p.fail(fmt::format("expected key=value, got '{}'", tokens[i]));
    out.emplace_back(lower(tokens[i].substr(0, eq)), std::string(tokens[i].substr(eq + 1)));
  }
  return out;
}

void parse_node(Parser& p, const std::vector<std::string_view>& t, Scenario& s, std::set<NodeId>& seen) {
  if (t.size() < 4) p.fail("node line needs: node <id> <S0|S2> <alive|failed> [synced] [silent]");
  DeviceSetup d;
  d.spec.id = p.node(t[1], "node id");
  if (d.spec.id.is_controller()) p.fail("node 1 is the controller and is implicit");
  if (!seen.insert(d.spec.id).second) p.fail(fmt::format("duplicate node id {}", d.spec.id.value()));
  const auto cls = lower(t[2]);
  if (cls == "s0")
    d.spec.security = SecurityClass::S0;
  else if (cls == "s2")
    d.spec.security = SecurityClass::S2;
  else
    p.fail(fmt::format("unknown security class '{}'", t[2]));
  const auto st = lower(t[3]);
  if (st == "alive")
    d.spec.status = nodes::NodeStatus::Alive;
  else if (st == "failed")
    d.spec.status = nodes::NodeStatus::Failed;
  else
    p.fail(fmt::format("unknown node status '{}'", t[3]));
  for (std::size_t i = 4; i < t.size(); ++i) {
    const auto flag = lower(t[i]);
    if (flag == "synced") {
      if (d.spec.security != SecurityClass::S2) p.fail("only S2 nodes can start synced");
      d.span_synced = true;
    } else if (flag == "silent") {
      d.spec.responds_to_nonce_get = false;
    } else {
      p.fail(fmt::format("unknown node flag '{}'", t[i]));
    }
  }
  s.network.devices.push_back(d);
}

void parse_network_key(Parser& p, std::string_view key, std::string_view value, Scenario& s, int& timeout_line) {
  auto& n = s.network;
  if (key == "home") {
    const auto h = p.unsigned_int(value, "home", 16);
    if (h > 0xFFFFFFFFu) p.fail("home id does not fit in 32 bits");
    n.home = HomeId{static_cast<std::uint32_t>(h)};
  } else if (key == "timeout") {
    n.nonce_timeout = p.time(value, "timeout");
    timeout_line = p.line();
  } else if (key == "queue_capacity") {
    n.queue_capacity = p.unsigned_int(value, "queue_capacity");
    if (n.queue_capacity == 0) p.fail("queue_capacity must be at least 1");
  } else if (key == "network_key") {
    const auto bytes = p.hex(value, "network_key");
    if (bytes.size() != 16) p.fail("network_key must be 16 bytes");
    std::ranges::copy(bytes, n.network_key.begin());
  } else if (key == "retry_interval") {
    n.retry_interval = p.time(value, "retry_interval");
    if (n.retry_interval <= SimTime{0}) p.fail("retry_interval must be positive");
  } else if (key == "max_retries") {
    n.max_retries = static_cast<unsigned>(p.unsigned_int(value, "max_retries"));
  } else if (key == "nonce_request_timeout") {
    if (lower(value) == "none")
      n.nonce_request_timeout.reset();
    else
      n.nonce_request_timeout = p.time(value, "nonce_request_timeout");
  } else {
    p.fail(fmt::format("unknown [network] key '{}'", key));
  }
}

void parse_medium_key(Parser& p, std::string_view key, std::string_view value, Scenario& s) {
  auto& m = s.network.medium;
  if (key == "propagation_delay")
    m.propagation_delay = p.time(value, "propagation_delay");
  else if (key == "loss")
    m.loss_probability = p.probability(value, "loss");
  else if (key == "crc")
    m.crc_corruption_probability = p.probability(value, "crc");
  else if (key == "tap_crc")
    m.tap_crc_probability = p.probability(value, "tap_crc");
  else if (key == "seed")
    s.seed = p.unsigned_int(value, "seed");
  else
    p.fail(fmt::format("unknown [medium] key '{}'", key));
}

void parse_dos(Parser& p, const Args& args, TimedAction& a) {
  attack::DosPlan plan;
  for (const auto& [k, v] : args) {
    if (k == "src") {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) plan.spoofed.push_back(p.node(item, "src"));
    } else if (k == "duration") {
      plan.duration = p.time(v, "duration");
    } else if (k == "gap") {
      plan.gap = p.time(v, "gap");
      if (plan.gap <= SimTime{0}) p.fail("gap must be positive");
    } else if (k == "desync_at") {
      if (lower(v) == "none")
        plan.desync_at_iteration.reset();
      else
        plan.desync_at_iteration = static_cast<unsigned>(p.unsigned_int(v, "desync_at"));
    } else if (k == "desync_range") {
      plan.desync_range = p.range(v, "desync_range");
    } else {
      p.fail(fmt::format("unknown dos argument '{}'", k));
    }
  }
  if (plan.spoofed.empty()) p.fail("dos needs src=<id>[,<id>...]");
  a.action = DosAction{plan};
}

void parse_timeline(Parser& p, const std::vector<std::string_view>& t, Scenario& s, bool& have_end) {
  const auto verb0 = lower(t[0]);
  if (verb0 == "run_until") {
    if (t.size() != 2) p.fail("run_until takes one time");
    if (have_end) p.fail("run_until given twice");
    s.end = p.time(t[1], "run_until");
    have_end = true;
    return;
  }
  if (verb0 != "at" || t.size() < 3) p.fail("timeline lines are 'at <t> <verb> ...' or 'run_until <t>'");
  TimedAction a;
  a.line = p.line();
  a.at = p.time(t[1], "time");
  const auto verb = lower(t[2]);
  if (verb == "trigger") {
    if (t.size() < 4) p.fail("trigger needs a node id");
    TriggerAction tr{p.node(t[3], "trigger node"), Bytes{0xFF}};
    for (const auto& [k, v] : key_values(p, t, 4)) {
      if (k != "payload") p.fail(fmt::format("unknown trigger argument '{}'", k));
      tr.payload = p.hex(v, "payload");
    }
    const bool known = std::ranges::any_of(s.network.devices, [&](const auto& d) { return d.spec.id == tr.node; });
    if (!known) p.fail(fmt::format("trigger on node {} which is not in [network]", tr.node.value()));
    a.action = tr;
  } else if (verb == "dos") {
    parse_dos(p, key_values(p, t, 3), a);
  } else if (verb == "desync") {
    DesyncAction d{attack::IdRange{6, 232}};
    for (const auto& [k, v] : key_values(p, t, 3)) {
      if (k == "range")
        d.range = p.range(v, "range");
      else if (k == "dst")
        d.claimed_dst = p.node(v, "dst");
      else
        p.fail(fmt::format("unknown desync argument '{}'", k));
    }
    a.action = d;
  } else if (verb == "fail") {
    if (t.size() != 4) p.fail("fail takes one node id");
    const auto id = p.node(t[3], "fail node");
    const bool known = std::ranges::any_of(s.network.devices, [&](const auto& d) { return d.spec.id == id; });
    if (!known) p.fail(fmt::format("fail on node {} which is not in [network]", id.value()));
    a.action = FailAction{id};
  } else {
    p.fail(fmt::format("unknown timeline verb '{}'", t[2]));
  }
  s.timeline.push_back(std::move(a));
}

std::string fmt_time(const std::optional<SimTime>& t) {
  return t ? fmt::format("{:.3f}", to_seconds(*t)) : std::string("none");
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", source, line, message) : fmt::format("{}: {}", source, message)),
      line_(line) {}

Scenario parse_scenario(std::string_view text, std::string name) {
  Scenario s;
  s.name = name;
  Parser p(std::move(name));
  enum class Section { None, Network, Medium, Timeline } section = Section::None;
  std::set<NodeId> seen;
  bool have_end = false;
  int timeout_line = 0;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    p.set_line(++line_no);

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      const auto sec = lower(line);
      if (sec == "[network]")
        section = Section::Network;
      else if (sec == "[medium]")
        section = Section::Medium;
      else if (sec == "[timeline]")
        section = Section::Timeline;
      else
        p.fail(fmt::format("unknown section {}", line));
      continue;
    }

    const auto tokens = split_ws(line);
    switch (section) {
      case Section::None:
        p.fail("content before the first section header");
      case Section::Network:
        if (lower(tokens[0]) == "node") {
          parse_node(p, tokens, s, seen);
          break;
        }
        [[fallthrough]];
      case Section::Medium: {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) p.fail(fmt::format("expected key = value, got '{}'", line));
        const auto key = lower(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (section == Section::Network)
          parse_network_key(p, key, value, s, timeout_line);
        else
          parse_medium_key(p, key, value, s);
        break;
      }
      case Section::Timeline:
        parse_timeline(p, tokens, s, have_end);
        break;
    }
  }

  try {
    nodes::validate_nonce_timeout(s.network.nonce_timeout);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(s.name, timeout_line, e.what());
  }

  if (!s.timeline.empty() && !have_end) throw ScenarioError(s.name, 0, "timeline has actions but no run_until");
  for (const auto& a : s.timeline)
    if (a.at > s.end)
      throw ScenarioError(s.name, a.line, fmt::format("action at {:.3f} s is after run_until", to_seconds(a.at)));
  // Stable so same-time actions keep file order.
  std::ranges::stable_sort(s.timeline, {}, &TimedAction::at);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  auto s = parse_scenario(ss.str(), path.string());
  s.name = path.stem().string();
  return s;
}

std::filesystem::path resolve_scenario(const std::string& name_or_path, const std::filesystem::path& scenario_dir) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return p;
  for (const auto& candidate : {scenario_dir / name_or_path, scenario_dir / (name_or_path + ".scn")})
    if (std::filesystem::exists(candidate)) return candidate;
  return p;
}

std::uint64_t pick_seed(std::optional<std::uint64_t> explicit_seed, const Scenario& s) {
  if (explicit_seed) return *explicit_seed;
  if (const char* env = std::getenv("ZWSIM_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view sv(env);
    const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc{} || ptr != sv.data() + sv.size())
      throw std::invalid_argument(fmt::format("ZWSIM_SEED '{}' is not a non-negative integer", sv));
    return v;
  }
  return s.seed.value_or(1);
}

std::unique_ptr<Network> build_network(const Scenario& s, std::uint64_t seed) {
  auto cfg = s.network;
  cfg.seed = seed;
  return std::make_unique<Network>(std::move(cfg));
}

void summarize_trace(const std::vector<sniff::TraceRecord>& trace, SimTime timeout, SimTime propagation,
                     Report& r) {
  std::set<std::uint64_t> spoofed;
  std::vector<SimTime> deliveries;
  r.attacker_frames_sent = 0;
  r.attack_start.reset();
  r.attack_end.reset();
  for (const auto& rec : trace) {
    if (rec.note.find("spoofed") != std::string::npos) {
      spoofed.insert(rec.line_no);
      ++r.attacker_frames_sent;
      if (!r.attack_start) r.attack_start = rec.time;
      r.attack_end = rec.time;
    }
    if (rec.note.find("event delivered") != std::string::npos) deliveries.push_back(rec.time + propagation);
  }
  std::ranges::sort(deliveries);
  r.events_delivered = deliveries.size();

  r.drain_end = r.attack_end;
  if (r.attack_end) {
    for (const auto& rec : trace) {
      const auto at = rec.note.find("answers line ");
      if (at == std::string::npos) continue;
      std::uint64_t ref = 0;
      const auto digits = rec.note.c_str() + at + 13;
      std::from_chars(digits, rec.note.c_str() + rec.note.size(), ref);
      if (spoofed.contains(ref)) r.drain_end = std::max(*r.drain_end, rec.time + timeout);
    }
  }

  r.events_delivered_in_attack_window = 0;
  r.first_post_attack_delivery.reset();
  r.blocked_interval.reset();
  r.backlog_drain.reset();
  if (!r.attack_start) return;
  for (const auto t : deliveries) {
    if (t >= *r.attack_start && t <= *r.drain_end) ++r.events_delivered_in_attack_window;
    if (t > *r.attack_end && !r.first_post_attack_delivery) r.first_post_attack_delivery = t;
  }
  r.backlog_drain = *r.drain_end - *r.attack_end;
  if (r.first_post_attack_delivery) r.blocked_interval = *r.first_post_attack_delivery - *r.attack_start;
}

std::string format_report(const Report& r) {
  std::string out;
  auto line = [&out](std::string_view k, const std::string& v) { out += fmt::format("{}={}\n", k, v); };
  line("scenario", r.scenario);
  line("seed", std::to_string(r.seed));
  line("timeout", fmt_time(r.timeout));
  line("events_triggered", std::to_string(r.events_triggered));
  line("events_delivered", std::to_string(r.events_delivered));
  line("events_delivered_in_attack_window", std::to_string(r.events_delivered_in_attack_window));
  line("attacker_frames_sent", std::to_string(r.attacker_frames_sent));
  line("attack_start", fmt_time(r.attack_start));
  line("attack_end", fmt_time(r.attack_end));
  line("drain_end", fmt_time(r.drain_end));
  line("backlog_drain_seconds", fmt_time(r.backlog_drain));
  line("first_post_attack_delivery", fmt_time(r.first_post_attack_delivery));
  line("blocked_interval", fmt_time(r.blocked_interval));
  line("frames_sent", std::to_string(r.frames_sent));
  line("frames_delivered", std::to_string(r.frames_delivered));
  line("frames_lost", std::to_string(r.frames_lost));
  line("frames_corrupted", std::to_string(r.frames_corrupted));
  line("max_queue_depth", std::to_string(r.max_queue_depth));
  line("queue_overflows", std::to_string(r.queue_overflows));
  line("end", fmt_time(r.end));
  return out;
}

RunResult run(const Scenario& s, std::uint64_t seed) {
  auto net = build_network(s, seed);
  for (const auto& a : s.timeline) {
    std::visit(
        [&](const auto& act) {
          using A = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<A, TriggerAction>)
            net->trigger_event(act.node, act.payload, a.at);
          else if constexpr (std::is_same_v<A, DosAction>)
            attack::send_dos(*net, act.plan, a.at);
          else if constexpr (std::is_same_v<A, DesyncAction>)
            attack::desync_all(*net, act.range, a.at, act.claimed_dst);
          else
            net->fail_node(act.node, a.at);
        },
        a.action);
  }
  const auto sim = net->run_until(s.end);
  net->check_invariants();

  RunResult out;
  out.trace = net->medium().trace().records();
  auto& r = out.report;
  r.scenario = s.name;
  r.seed = seed;
  r.timeout = s.network.nonce_timeout;
  r.events_triggered = net->events_triggered();
  summarize_trace(out.trace, s.network.nonce_timeout, s.network.medium.propagation_delay, r);
  if (r.events_delivered != net->deliveries().size())
    throw InvariantViolation("trace and controller disagree on delivered events");
  if (r.attacker_frames_sent != net->attacker_lines().size())
    throw InvariantViolation("trace and attacker disagree on spoofed frames");
  r.frames_sent = sim.counters.frames_sent;
  r.frames_delivered = sim.counters.frames_delivered;
  r.frames_lost = sim.counters.frames_lost;
  r.frames_corrupted = sim.counters.frames_corrupted;
  r.max_queue_depth = net->controller().max_queue_depth();
  r.queue_overflows = net->controller().queue_overflows();
  r.end = sim.end;
  return out;
}

}  // namespace zwsim::scenario
