#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace zwsim {

using Bytes = std::vector<std::uint8_t>;

/// Virtual simulation time, millisecond resolution.
using SimTime = std::chrono::duration<std::int64_t, std::milli>;

inline constexpr SimTime seconds(double s) {
  return SimTime{static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
}

inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) / 1000.0; }

/// Z-Wave node address. 1 is the controller, 2..232 are assignable.
class NodeId {
 public:
  static constexpr std::uint8_t kController = 1;
  static constexpr std::uint8_t kMax = 232;

  constexpr NodeId() = default;
  explicit NodeId(int value) : value_(checked(value)) {}

  static NodeId controller() { return NodeId{kController}; }

  constexpr std::uint8_t value() const { return value_; }
  constexpr bool is_controller() const { return value_ == kController; }

  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  static std::uint8_t checked(int v) {
    if (v < 1 || v > kMax)
      throw std::out_of_range("node id " + std::to_string(v) + " outside [1, 232]");
    return static_cast<std::uint8_t>(v);
  }

  std::uint8_t value_ = kController;
};

struct HomeId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(const HomeId&, const HomeId&) = default;
};

enum class SecurityClass { S0, S2 };

inline const char* to_string(SecurityClass s) { return s == SecurityClass::S0 ? "S0" : "S2"; }

}  // namespace zwsim
