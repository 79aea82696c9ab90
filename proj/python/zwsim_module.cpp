// Python bindings: scenario runs, discovery, budget and a few crypto helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zwsim/attack.hpp"
#include "zwsim/crypto.hpp"
#include "zwsim/scenario.hpp"
#include "zwsim/sniff.hpp"
#include "zwsim/wire.hpp"

namespace py = pybind11;
namespace sc = zwsim::scenario;
using zwsim::to_seconds;

namespace {

std::span<const std::uint8_t> view(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

template <typename C>
py::bytes to_bytes(const C& c) {
  return py::bytes(reinterpret_cast<const char*>(c.data()), c.size());
}

py::object opt_seconds(const std::optional<zwsim::SimTime>& t) {
  return t ? py::cast(to_seconds(*t)) : py::none();
}

py::dict report_dict(const sc::Report& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["seed"] = r.seed;
  d["timeout"] = to_seconds(r.timeout);
  d["events_triggered"] = r.events_triggered;
  d["events_delivered"] = r.events_delivered;
  d["events_delivered_in_attack_window"] = r.events_delivered_in_attack_window;
  d["attacker_frames_sent"] = r.attacker_frames_sent;
  d["attack_start"] = opt_seconds(r.attack_start);
  d["attack_end"] = opt_seconds(r.attack_end);
  d["drain_end"] = opt_seconds(r.drain_end);
  d["first_post_attack_delivery"] = opt_seconds(r.first_post_attack_delivery);
  d["blocked_interval"] = opt_seconds(r.blocked_interval);
  d["backlog_drain"] = opt_seconds(r.backlog_drain);
  d["frames_sent"] = r.frames_sent;
  d["frames_delivered"] = r.frames_delivered;
  d["frames_lost"] = r.frames_lost;
  d["frames_corrupted"] = r.frames_corrupted;
  d["max_queue_depth"] = r.max_queue_depth;
  d["queue_overflows"] = r.queue_overflows;
  d["end"] = to_seconds(r.end);
  return d;
}

sc::Scenario load(const std::string& name_or_path, const std::string& scenario_dir) {
  return sc::load_scenario(sc::resolve_scenario(name_or_path, scenario_dir));
}

zwsim::crypto::Key128 key_from(const std::string& b) {
  if (b.size() != 16) throw py::value_error("key must be 16 bytes");
  zwsim::crypto::Key128 k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

}  // namespace

PYBIND11_MODULE(_zwsim, m) {
  m.doc() = "Z-Wave nonce denial-of-service simulator";

  py::register_exception<sc::ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<zwsim::InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  m.def(
      "simulate",
      [](const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& scenario_dir) {
        const auto s = load(scenario, scenario_dir);
        const auto result = sc::run(s, sc::pick_seed(seed, s));
        return py::make_tuple(report_dict(result.report), zwsim::sniff::to_csv(result.trace));
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("scenario_dir") = ".",
      "Run a scenario file (or bundled name under scenario_dir). Returns (report, trace_csv).");

  m.def(
      "simulate_text",
      [](const std::string& text, std::optional<std::uint64_t> seed) {
        const auto s = sc::parse_scenario(text, "inline");
        const auto result = sc::run(s, sc::pick_seed(seed, s));
        return py::make_tuple(report_dict(result.report), zwsim::sniff::to_csv(result.trace));
      },
      py::arg("text"), py::arg("seed") = py::none());

  m.def(
      "discover",
      [](const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& scenario_dir) {
        const auto s = load(scenario, scenario_dir);
        auto net = sc::build_network(s, sc::pick_seed(seed, s));
        std::map<int, std::string> out;
        for (const auto& [id, l] : zwsim::attack::find_online_nodes(*net))
          out[id.value()] = zwsim::attack::to_string(l);
        return out;
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("scenario_dir") = ".");

  m.def(
      "budget",
      [](unsigned nodes, double timeout) {
        return zwsim::attack::format_budget(zwsim::attack::worst_case_budget(nodes, zwsim::seconds(timeout)));
      },
      py::arg("nodes"), py::arg("timeout") = 10.0);

  m.def("checksum", [](const std::string& data) { return zwsim::wire::checksum(view(data)); });

  m.def("derive_keys", [](const std::string& network_key) {
    const auto k = zwsim::crypto::derive_keys(key_from(network_key));
    return py::make_tuple(to_bytes(k.encryption_key), to_bytes(k.authentication_key));
  });

  m.def(
      "ctr_drbg",
      [](const std::string& entropy, unsigned blocks) {
        auto st = zwsim::crypto::ctr_drbg_instantiate(view(entropy));
        py::list out;
        for (unsigned i = 0; i < blocks; ++i) out.append(to_bytes(zwsim::crypto::ctr_drbg_generate_block(st)));
        return out;
      },
      py::arg("entropy"), py::arg("blocks") = 1, "CTR_DRBG output blocks for 32 bytes of entropy.");
}
