#include "zwsim/medium.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace zwsim::medium {

void MediumConfig::validate() const {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("{} {} outside [0, 1]", name, p));
  };
  check(loss_probability, "loss probability");
  check(crc_corruption_probability, "crc corruption probability");
  check(tap_crc_probability, "tap crc probability");
  if (propagation_delay < SimTime{0}) throw std::invalid_argument("propagation delay must not be negative");
}

Medium::Medium(MediumConfig config) : config_(config), rng_(config.seed) { config_.validate(); }

void Medium::attach(NodeId id, Endpoint& endpoint) { endpoints_[id] = &endpoint; }

void Medium::add_tap(TapListener listener) { taps_.push_back(std::move(listener)); }

std::uint64_t Medium::schedule(SimTime at, EventKind kind) {
  if (at < now_)
    throw std::invalid_argument(
        fmt::format("event at {:.3f} s is before the current time {:.3f} s", to_seconds(at), to_seconds(now_)));
  const auto seq = next_seq_++;
  queue_.push(SimEvent{at, seq, std::move(kind)});
  return seq;
}

std::uint64_t Medium::transmit(const wire::MacFrame& frame, Origin origin, std::string note) {
  Bytes bytes = wire::encode_frame(frame);
  ++counters_.frames_sent;

  // Fixed draw order per transmission keeps runs reproducible.
  const bool lost = rng_.next_unit() < config_.loss_probability;
  const bool corrupt = rng_.next_unit() < config_.crc_corruption_probability;
  const std::uint64_t flip_bit = rng_.next_u64();
  const bool tap_corrupt = rng_.next_unit() < config_.tap_crc_probability;

  sniff::TraceStatus status = sniff::TraceStatus::Delivered;
  if (lost) {
    status = sniff::TraceStatus::Lost;
    ++counters_.frames_lost;
  } else if (corrupt) {
    status = sniff::TraceStatus::CrcError;
    ++counters_.frames_corrupted;
    const auto bit = flip_bit % (bytes.size() * 8);
    bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  } else {
    ++counters_.frames_delivered;
  }

  const auto line = trace_.record(frame, status, now_, std::move(note)).line_no;
  for (const auto& tap : taps_) tap(TapObservation{frame, now_, tap_corrupt, origin, line});
  if (!lost) schedule(now_ + config_.propagation_delay, DeliverEvent{std::move(bytes), frame.dst, line});
  return line;
}

void Medium::dispatch(SimEvent& ev) {
  std::visit(
      [&](auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, DeliverEvent>) {
          auto it = endpoints_.find(e.to);
          if (it == endpoints_.end()) return;
          wire::MacFrame frame;
          try {
            frame = wire::decode_frame(e.bytes);
          } catch (const wire::WireError&) {
            return;  // receiver drops frames that fail to parse or checksum
          }
          it->second->on_frame(frame, e.trace_line, now_);
        } else if constexpr (std::is_same_v<E, TimerEvent>) {
          if (auto it = endpoints_.find(e.node); it != endpoints_.end()) it->second->on_timer(e.token, now_);
        } else if constexpr (std::is_same_v<E, TriggerEvent>) {
          if (auto it = endpoints_.find(e.node); it != endpoints_.end())
            it->second->on_trigger(std::move(e.payload), now_);
        } else {
          e.run(now_);
        }
      },
      ev.kind);
}

SimReport Medium::run_until(SimTime t_end) {
  while (!queue_.empty() && queue_.top().time <= t_end) {
    // priority_queue::top is const; the event is moved out before pop.
    SimEvent ev = std::move(const_cast<SimEvent&>(queue_.top()));
    queue_.pop();
    if (ev.time < now_) throw std::logic_error("clock would move backwards");
    now_ = ev.time;
    ++counters_.events_processed;
    dispatch(ev);
  }
  if (t_end > now_) now_ = t_end;
  return SimReport{now_, counters_};
}

}  // namespace zwsim::medium
