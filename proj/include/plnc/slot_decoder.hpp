#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plnc/gf2.hpp"
#include "plnc/ldpc.hpp"
#include "plnc/phy.hpp"
#include "plnc/predictor.hpp"

namespace plnc {

/// Which weight vectors the slot decoder attempts in each round.
struct SelectionPolicy {
  enum class Kind { kExhaustive, kThreshold, kTopNu, kSicOnly };

  Kind kind = Kind::kExhaustive;
  double threshold = 0.5;  // kThreshold
  std::size_t top = 1;     // kTopNu

  static SelectionPolicy exhaustive() { return {}; }
  static SelectionPolicy threshold_at(double tau);
  static SelectionPolicy top_nu(std::size_t nu);
  static SelectionPolicy sic_only() { return {Kind::kSicOnly, 0.5, 1}; }

  /// "exhaustive", "sic", "dnn:<tau>" or "top:<nu>".
  static SelectionPolicy parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] bool uses_predictor() const { return kind == Kind::kThreshold || kind == Kind::kTopNu; }

  friend bool operator==(const SelectionPolicy&, const SelectionPolicy&) = default;
};

struct DecodedCombination {
  /// Coefficients over the slot's transmitters (SlotObservation::users order).
  BitWord weights;
  BitWord word;
  std::size_t slot = 0;
  /// 1-based decoding round.
  std::size_t iteration = 1;
  bool syndrome_ok = false;
  bool genie_correct = false;
};

struct SlotResult {
  std::vector<DecodedCombination> decoded;
  /// Positions into SlotObservation::users that were not decoded individually.
  std::vector<std::size_t> residual_users;
  std::size_t attempts = 0;
  /// BP runs per executed round.
  std::vector<std::size_t> round_attempts;
  std::size_t rounds = 0;
  bool capacity_exceeded = false;
};

struct SlotDecoderOptions {
  std::size_t max_rounds = 3;
  int max_iter = kDefaultBpIterations;
  std::size_t max_degree = kDefaultMaxDegree;
  /// Derive further individual codewords by eliminating over accepted
  /// combinations after each round.
  bool propagate = false;
};

/// All nonzero weight vectors of length d in index order a(1) .. a(2^d - 1).
std::vector<BitWord> exhaustive_candidates(std::size_t d);
/// Weight vectors of length d with at least two ones, in index order.
std::vector<BitWord> sum_decoding_candidates(std::size_t d);

/// Policy-driven pick from a prediction vector p over a(1) .. a(2^d - 1).
/// Threshold: every a(i) with p_i >= tau by decreasing p_i (ties by lower i).
/// TopNu: the nu largest, ties by lower i. Exhaustive: all in index order.
/// SicOnly: the weight-one vectors.
std::vector<BitWord> select_combinations(std::span<const double> p, const SelectionPolicy& policy);

struct SicResult {
  std::vector<DecodedCombination> decoded;
  std::vector<double> residual;
  std::vector<std::size_t> residual_users;
  std::size_t attempts = 0;
};

/// Classical successive cancellation: decode users by decreasing |h|,
/// treating the not-yet-cancelled users as Gaussian noise of variance
/// 1 + P * sum h^2, cancel each success and stop at the first failure.
SicResult sic_pass(const SlotObservation& obs, const LdpcCode& code, int max_iter = kDefaultBpIterations);

/// Attempts every candidate (weights over `users`, which index into obs) on
/// the signal `y` and returns the syndrome-accepted ones with weights
/// embedded over all slot transmitters.
std::vector<DecodedCombination> sum_decode_pass(std::span<const double> y, const SlotObservation& obs,
                                                std::span<const std::size_t> users, const LdpcCode& code,
                                                std::span<const BitWord> candidates, std::size_t iteration,
                                                int max_iter = kDefaultBpIterations, std::size_t* attempts = nullptr);

/// Round-based receiver: each round builds candidates over the users not yet
/// decoded individually, attempts them on the residual signal, then cancels
/// newly decoded singletons. Stops when a round yields no new singleton or
/// after max_rounds. Combinations accepted in an earlier round are not tried
/// again. Predictor inputs are the residual users' gains sorted by
/// decreasing |h|; output indices are mapped back to slot order.
SlotResult decode_slot_iterative(const SlotObservation& obs, const LdpcCode& code, const SelectionPolicy& policy,
                                 const PredictorBank* bank = nullptr, const SlotDecoderOptions& options = {});

}  // namespace plnc
