#include "plnc/traffic.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace plnc {

namespace {

// First `count` entries of a partial Fisher-Yates shuffle of 0..range-1.
std::vector<std::size_t> sample_without_replacement(std::size_t range, std::size_t count, Rng& rng) {
  std::vector<std::size_t> pool(range);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, range - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void FrameConfig::validate() const {
  if (slots_per_frame == 0) throw ConfigError("slots per frame must be positive");
  if (preamble_symbols + payload_symbols != symbols_per_slot) {
    throw ConfigError("preamble + payload symbols must equal symbols per slot");
  }
  if (replicas < 1 || replicas > slots_per_frame) {
    throw ConfigError("replicas r=" + std::to_string(replicas) + " must lie in [1, T_f=" +
                      std::to_string(slots_per_frame) + "]");
  }
  if (activation_probability) {
    if (!(*activation_probability >= 0.0 && *activation_probability <= 1.0)) {
      throw ConfigError("activation probability must lie in [0, 1]");
    }
  } else if (active_count > total_users) {
    throw ConfigError("active user count exceeds total users");
  }
}

FrameSchedule draw_frame(const FrameConfig& cfg, Rng& rng) {
  cfg.validate();
  FrameSchedule s;
  s.slots_per_frame = cfg.slots_per_frame;
  if (cfg.activation_probability) {
    std::bernoulli_distribution active(*cfg.activation_probability);
    for (std::size_t u = 0; u < cfg.total_users; ++u) {
      if (active(rng)) s.active.push_back(u);
    }
  } else {
    s.active = sample_without_replacement(cfg.total_users, cfg.active_count, rng);
  }
  s.placement.reserve(s.active.size());
  for (std::size_t i = 0; i < s.active.size(); ++i) {
    s.placement.push_back(sample_without_replacement(cfg.slots_per_frame, cfg.replicas, rng));
  }
  return s;
}

std::vector<std::size_t> slot_transmitters(const FrameSchedule& schedule, std::size_t slot) {
  if (slot >= schedule.slots_per_frame) throw std::out_of_range("slot index outside frame");
  std::vector<std::size_t> users;
  for (std::size_t i = 0; i < schedule.active.size(); ++i) {
    const auto& slots = schedule.placement[i];
    if (std::binary_search(slots.begin(), slots.end(), slot)) users.push_back(schedule.active[i]);
  }
  return users;
}

}  // namespace plnc
