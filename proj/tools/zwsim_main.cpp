#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "zwsim/attack.hpp"
#include "zwsim/scenario.hpp"
#include "zwsim/sniff.hpp"

namespace {

namespace sc = zwsim::scenario;

constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

std::filesystem::path scenario_dir() {
  if (const char* d = std::getenv("ZWSIM_SCENARIO_DIR"); d && *d) return d;
#ifdef ZWSIM_DEFAULT_SCENARIO_DIR
  return ZWSIM_DEFAULT_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

sc::Scenario load(const std::string& name) { return sc::load_scenario(sc::resolve_scenario(name, scenario_dir())); }

std::string join(const std::set<zwsim::NodeId>& ids) {
  std::string out;
  for (const auto id : ids) out += fmt::format("{}{}", out.empty() ? "" : ",", id.value());
  return out.empty() ? "-" : out;
}

int simulate(const std::string& name, std::optional<std::uint64_t> seed, const std::string& trace_out,
             const std::string& report_out) {
  const auto s = load(name);
  const auto result = sc::run(s, sc::pick_seed(seed, s));
  if (!trace_out.empty()) zwsim::sniff::export_csv(result.trace, trace_out);
  const auto text = sc::format_report(result.report);
  if (report_out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(report_out, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write report to {}", report_out));
    out << text;
  }
  return 0;
}

int discover(const std::string& name, std::optional<std::uint64_t> seed, double window) {
  const auto s = load(name);
  auto net = sc::build_network(s, sc::pick_seed(seed, s));
  // Passive phase first: the scenario's own triggers and failures in the
  // window play out while the tap listens.
  for (const auto& a : s.timeline) {
    if (a.at >= zwsim::seconds(window)) continue;
    if (const auto* t = std::get_if<sc::TriggerAction>(&a.action)) net->trigger_event(t->node, t->payload, a.at);
    if (const auto* f = std::get_if<sc::FailAction>(&a.action)) net->fail_node(f->node, a.at);
  }
  const auto traffic = zwsim::attack::observe_traffic(*net, zwsim::seconds(window));
  const auto classes = zwsim::attack::find_online_nodes(*net);
  net->check_invariants();

  const auto responding = zwsim::attack::responding_ids(classes);
  const auto failed = zwsim::attack::identify_failed(responding, traffic);
  for (const auto id : responding) std::cout << fmt::format("{} responding\n", id.value());
  std::cout << fmt::format("responding={}\n", join(responding));
  std::cout << fmt::format("silent_count={}\n", classes.size() - responding.size());
  std::cout << fmt::format("observed_traffic={}\n", join(traffic));
  std::cout << fmt::format("failed_candidates={}\n", join(failed));
  if (failed.empty() && !responding.empty()) std::cout << "fallback=all responding ids\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Z-Wave S0/S2 nonce denial-of-service simulator"};
  app.require_subcommand(1);

  std::string scenario, trace_out, report_out;
  std::optional<std::uint64_t> seed;
  double window = 60.0;
  unsigned nodes = 0;
  double timeout = 10.0;

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write its trace and report");
  sim->add_option("scenario", scenario, "Scenario file or bundled name")->required();
  sim->add_option("--seed", seed, "Seed (falls back to ZWSIM_SEED)");
  sim->add_option("--trace-out", trace_out, "Trace CSV path");
  sim->add_option("--report-out", report_out, "Report path (stdout if omitted)");

  auto* disc = app.add_subcommand("discover", "Probe ids 2-232 and classify them");
  disc->add_option("scenario", scenario, "Scenario file or bundled name")->required();
  disc->add_option("--seed", seed, "Seed (falls back to ZWSIM_SEED)");
  disc->add_option("--window", window, "Passive observation window in seconds")->check(CLI::NonNegativeNumber);

  auto* budget = app.add_subcommand("budget", "Worst-case frames an attacker needs");
  budget->add_option("--nodes", nodes, "Included node count")->required()->check(CLI::Range(0, 231));
  budget->add_option("--timeout", timeout, "Nonce timeout in seconds")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return simulate(scenario, seed, trace_out, report_out);
    if (*disc) return discover(scenario, seed, window);
    std::cout << zwsim::attack::format_budget(zwsim::attack::worst_case_budget(nodes, zwsim::seconds(timeout))) << '\n';
    return 0;
  } catch (const zwsim::InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
