#include "plnc/frame_decoder.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace plnc {

FrameSystem assemble(std::span<const SlotDecodes> slots, std::span<const std::size_t> active, std::size_t n) {
  if (!std::ranges::is_sorted(active)) throw std::invalid_argument("assemble: active set must be sorted");
  FrameSystem sys{BitMatrix(0, active.size()), BitMatrix(0, n), {}};
  std::map<std::pair<BitWord, BitWord>, std::size_t> seen;
  for (const auto& slot : slots) {
    std::vector<std::size_t> pos;
    for (auto u : slot.users) {
      const auto it = std::ranges::lower_bound(active, u);
      if (it == active.end() || *it != u) {
        throw DimensionError("assemble: slot user " + std::to_string(u) + " is not active");
      }
      pos.push_back(static_cast<std::size_t>(it - active.begin()));
    }
    for (const auto& c : slot.decoded) {
      if (c.weights.size() != pos.size() || c.word.size() != n) throw DimensionError("assemble: malformed decode");
      BitWord row(active.size());
      for (std::size_t k = 0; k < pos.size(); ++k) {
        if (c.weights.get(k)) row.set(pos[k], true);
      }
      auto key = std::make_pair(row, c.word);
      if (const auto it = seen.find(key); it != seen.end()) {
        sys.row_genie_correct[it->second] = sys.row_genie_correct[it->second] && c.genie_correct;
        continue;
      }
      seen.emplace(std::move(key), sys.a.n_rows());
      sys.a.append_row(std::move(row));
      sys.w_hat.append_row(c.word);
      sys.row_genie_correct.push_back(c.genie_correct);
    }
  }
  return sys;
}

FrameResult recover(const BitMatrix& a, const BitMatrix& w_hat) {
  if (a.n_rows() != w_hat.n_rows()) throw DimensionError("recover: A and W differ in row count");
  FrameResult res;
  res.a = a;
  res.w_hat = w_hat;
  const auto solved = solve_combinations(a, w_hat);
  res.recovered = solved.unknowns;
  res.conflicts = solved.conflicts;
  res.rank = solved.rank;
  for (std::size_t i = 0; i < a.n_cols(); ++i) {
    if (!res.recovered.contains(i)) res.lost.push_back(i);
  }
  return res;
}

double LossCount::rate() const {
  if (total == 0) throw std::invalid_argument("packet loss over zero packets");
  return static_cast<double>(lost) / static_cast<double>(total);
}

LossCount packet_loss(const FrameResult& result, std::span<const BitWord> truth) {
  LossCount c;
  c.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto it = result.recovered.find(i);
    if (it == result.recovered.end() || it->second != truth[i]) ++c.lost;
  }
  return c;
}

double packet_loss_rate(std::span<const LossCount> frames) {
  if (frames.empty()) throw std::invalid_argument("packet loss over zero frames");
  LossCount sum;
  for (const auto& f : frames) sum += f;
  return sum.rate();
}

}  // namespace plnc
