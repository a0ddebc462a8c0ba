#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "plnc/rng.hpp"

namespace plnc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Frame numerology and activity model.
struct FrameConfig {
  std::size_t slots_per_frame = 10;    // T_f
  std::size_t symbols_per_slot = 168;  // T_s
  std::size_t preamble_symbols = 40;   // T_p
  std::size_t payload_symbols = 128;   // n
  std::size_t replicas = 2;            // r
  std::size_t total_users = 64;        // L
  std::size_t active_count = 6;
  /// When set, each of the L users is active independently with this
  /// probability and active_count is ignored.
  std::optional<double> activation_probability;

  /// Throws ConfigError on inconsistent numerology.
  void validate() const;
};

struct FrameSchedule {
  std::vector<std::size_t> active;                  // sorted user ids
  std::vector<std::vector<std::size_t>> placement;  // per active user, sorted slot indices
  std::size_t slots_per_frame = 0;
};

FrameSchedule draw_frame(const FrameConfig& cfg, Rng& rng);

/// Users transmitting in `slot`, ascending by id.
std::vector<std::size_t> slot_transmitters(const FrameSchedule& schedule, std::size_t slot);

}  // namespace plnc
