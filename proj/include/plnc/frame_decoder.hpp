#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "plnc/gf2.hpp"
#include "plnc/slot_decoder.hpp"

namespace plnc {

/// Decoded combinations of one slot together with the global ids of the
/// slot's transmitters (the column meaning of each weight vector).
struct SlotDecodes {
  std::vector<std::size_t> users;
  std::vector<DecodedCombination> decoded;
};

struct FrameSystem {
  BitMatrix a;      // one row per distinct combination, |A| columns
  BitMatrix w_hat;  // matching decoded words
  /// Per row: true when every contributing decode was genie-correct.
  std::vector<bool> row_genie_correct;
};

struct FrameResult {
  BitMatrix a;
  BitMatrix w_hat;
  /// Active position -> recovered codeword.
  std::map<std::size_t, BitWord> recovered;
  std::vector<std::size_t> lost;
  std::size_t conflicts = 0;
  std::size_t rank = 0;
};

/// Embeds each slot-local weight vector into a row over the ordered active
/// set. A row that repeats an earlier (weights, word) pair is dropped.
/// Throws DimensionError if a slot user is not active.
FrameSystem assemble(std::span<const SlotDecodes> slots, std::span<const std::size_t> active, std::size_t n);

/// Elimination on [A | W]: positions whose RREF row has a single one are
/// recovered; inconsistent rows are counted as conflicts.
FrameResult recover(const BitMatrix& a, const BitMatrix& w_hat);

struct LossCount {
  std::size_t lost = 0;
  std::size_t total = 0;

  [[nodiscard]] double rate() const;
  LossCount& operator+=(const LossCount& o) {
    lost += o.lost;
    total += o.total;
    return *this;
  }
};

/// Packets of one frame that were not recovered or were recovered with the
/// wrong content. `truth[i]` is the codeword of active position i.
LossCount packet_loss(const FrameResult& result, std::span<const BitWord> truth);

/// Pools per-frame counts; throws std::invalid_argument for an empty batch.
double packet_loss_rate(std::span<const LossCount> frames);

}  // namespace plnc
