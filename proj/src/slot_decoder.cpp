#include "plnc/slot_decoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

namespace plnc {

namespace {

BitWord embed(const BitWord& local, std::span<const std::size_t> users, std::size_t slot_degree) {
  BitWord full(slot_degree);
  for (std::size_t k = 0; k < users.size(); ++k) {
    if (local.get(k)) full.set(users[k], true);
  }
  return full;
}

bool genie_match(const SlotObservation& obs, const BitWord& weights, const BitWord& word) {
  if (obs.genie_codewords.size() != weights.size()) return false;
  return xor_accumulate(obs.genie_codewords, weights) == word;
}

std::vector<double> gains_of(const SlotObservation& obs, std::span<const std::size_t> users) {
  std::vector<double> g;
  g.reserve(users.size());
  for (auto u : users) g.push_back(obs.gains[u]);
  return g;
}

// Candidates over `users` for one round, in attempt order.
std::vector<BitWord> round_candidates(const SlotObservation& obs, std::span<const std::size_t> users,
                                      const SelectionPolicy& policy, const PredictorBank* bank) {
  const std::size_t d = users.size();
  if (!policy.uses_predictor()) {
    if (policy.kind == SelectionPolicy::Kind::kSicOnly) {
      // Strongest first.
      const auto gains = gains_of(obs, users);
      std::vector<BitWord> out;
      for (auto k : magnitude_order(gains)) {
        BitWord a(d);
        a.set(k, true);
        out.push_back(std::move(a));
      }
      return out;
    }
    return exhaustive_candidates(d);
  }
  if (bank == nullptr) throw std::invalid_argument("selection policy " + policy.to_string() + " needs predictor models");
  if (d == 1 && !bank->has(1)) return exhaustive_candidates(1);

  const auto gains = gains_of(obs, users);
  const auto order = magnitude_order(gains);
  std::vector<double> sorted(d);
  for (std::size_t k = 0; k < d; ++k) sorted[k] = gains[order[k]];
  const auto p = bank->at(d).forward(sorted);
  std::vector<BitWord> out;
  for (const auto& a_sorted : select_combinations(p, policy)) {
    BitWord a(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (a_sorted.get(k)) a.set(order[k], true);
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

SelectionPolicy SelectionPolicy::threshold_at(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  return {Kind::kThreshold, tau, 1};
}

SelectionPolicy SelectionPolicy::top_nu(std::size_t nu) {
  if (nu < 1) throw std::invalid_argument("top-nu count must be at least 1");
  return {Kind::kTopNu, 0.5, nu};
}

SelectionPolicy SelectionPolicy::parse(std::string_view text) {
  if (text == "exhaustive") return exhaustive();
  if (text == "sic") return sic_only();
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    const auto tail = text.substr(colon + 1);
    const char* first = tail.data();
    const char* last = tail.data() + tail.size();
    if (head == "dnn") {
      double tau = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, tau);
      if (ec == std::errc{} && ptr == last && !tail.empty()) return threshold_at(tau);
    } else if (head == "top") {
      std::size_t nu = 0;
      const auto [ptr, ec] = std::from_chars(first, last, nu);
      if (ec == std::errc{} && ptr == last && !tail.empty()) return top_nu(nu);
    }
  }
  throw std::invalid_argument("unknown policy '" + std::string(text) + "' (expected exhaustive, sic, dnn:<tau>, top:<nu>)");
}

std::string SelectionPolicy::to_string() const {
  switch (kind) {
    case Kind::kExhaustive:
      return "exhaustive";
    case Kind::kSicOnly:
      return "sic";
    case Kind::kThreshold:
      return "dnn:" + format_double(threshold);
    case Kind::kTopNu:
      return "top:" + std::to_string(top);
  }
  return "?";
}

std::vector<BitWord> exhaustive_candidates(std::size_t d) {
  if (d > 20) throw DimensionError("exhaustive_candidates: degree too large");
  std::vector<BitWord> out;
  const std::uint64_t count = (std::uint64_t{1} << d) - 1;
  out.reserve(count);
  for (std::uint64_t i = 1; i <= count; ++i) out.push_back(binary_expansion(i, d));
  return out;
}

std::vector<BitWord> sum_decoding_candidates(std::size_t d) {
  auto all = exhaustive_candidates(d);
  std::erase_if(all, [](const BitWord& a) { return a.weight() < 2; });
  return all;
}

std::vector<BitWord> select_combinations(std::span<const double> p, const SelectionPolicy& policy) {
  const std::size_t count = p.size();
  std::size_t d = 0;
  while (((std::size_t{1} << d) - 1) < count) ++d;
  if (((std::size_t{1} << d) - 1) != count || count == 0) {
    throw DimensionError("select_combinations: probability vector length must be 2^d - 1");
  }
  switch (policy.kind) {
    case SelectionPolicy::Kind::kExhaustive:
      return exhaustive_candidates(d);
    case SelectionPolicy::Kind::kSicOnly: {
      std::vector<BitWord> out;
      for (std::size_t k = 0; k < d; ++k) out.push_back(binary_expansion(std::uint64_t{1} << k, d));
      return out;
    }
    case SelectionPolicy::Kind::kThreshold:
    case SelectionPolicy::Kind::kTopNu:
      break;
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::vector<BitWord> out;
  for (std::size_t r = 0; r < count; ++r) {
    const auto i = idx[r];
    if (policy.kind == SelectionPolicy::Kind::kThreshold ? !(p[i] >= policy.threshold) : r >= policy.top) break;
    out.push_back(binary_expansion(i + 1, d));
  }
  return out;
}

SicResult sic_pass(const SlotObservation& obs, const LdpcCode& code, int max_iter) {
  SicResult res;
  res.residual = obs.y;
  const std::size_t d = obs.users.size();
  std::vector<std::size_t> order = magnitude_order(obs.gains);
  BpDecoder decoder(code);
  std::size_t next = 0;
  for (; next < order.size(); ++next) {
    const std::size_t u = order[next];
    double interference = 0.0;
    for (std::size_t j = next + 1; j < order.size(); ++j) interference += obs.gains[order[j]] * obs.gains[order[j]];
    const auto llr = channel_llr_single(res.residual, obs.gains[u], obs.power, 1.0 + obs.power * interference);
    const auto out = decoder.decode(llr, max_iter);
    ++res.attempts;
    if (!out.syndrome_ok) break;
    BitWord a(d);
    a.set(u, true);
    const bool genie = genie_match(obs, a, out.word);
    res.decoded.push_back({std::move(a), out.word, 0, 1, true, genie});
    res.residual = cancel(res.residual, obs.gains[u], out.word, obs.power);
  }
  res.residual_users.assign(order.begin() + static_cast<std::ptrdiff_t>(next), order.end());
  std::sort(res.residual_users.begin(), res.residual_users.end());
  return res;
}

std::vector<DecodedCombination> sum_decode_pass(std::span<const double> y, const SlotObservation& obs,
                                                std::span<const std::size_t> users, const LdpcCode& code,
                                                std::span<const BitWord> candidates, std::size_t iteration,
                                                int max_iter, std::size_t* attempts) {
  std::vector<DecodedCombination> out;
  if (candidates.empty()) return out;
  const auto gains = gains_of(obs, users);
  const ComboLikelihood likelihood(y, gains, obs.power, std::max<std::size_t>(users.size(), 1));
  BpDecoder decoder(code);
  for (const auto& a : candidates) {
    if (a.size() != users.size() || a.is_zero()) throw DimensionError("sum_decode_pass: bad weight vector");
    const auto result = decoder.decode(likelihood.llr(a), max_iter);
    if (attempts != nullptr) ++*attempts;
    if (!result.syndrome_ok) continue;
    auto full = embed(a, users, obs.users.size());
    const bool genie = genie_match(obs, full, result.word);
    out.push_back({std::move(full), result.word, 0, iteration, true, genie});
  }
  return out;
}

SlotResult decode_slot_iterative(const SlotObservation& obs, const LdpcCode& code, const SelectionPolicy& policy,
                                 const PredictorBank* bank, const SlotDecoderOptions& options) {
  SlotResult res;
  const std::size_t d = obs.users.size();
  if (obs.gains.size() != d) throw DimensionError("decode_slot_iterative: gains and users differ in length");
  res.residual_users.resize(d);
  std::iota(res.residual_users.begin(), res.residual_users.end(), std::size_t{0});
  if (d == 0) return res;
  if (d > options.max_degree) {
    res.capacity_exceeded = true;
    return res;
  }

  std::vector<double> y = obs.y;
  std::set<BitWord> accepted;
  for (std::size_t round = 1; round <= options.max_rounds && !res.residual_users.empty(); ++round) {
    res.rounds = round;
    std::vector<BitWord> candidates;
    for (auto& a : round_candidates(obs, res.residual_users, policy, bank)) {
      if (!accepted.contains(embed(a, res.residual_users, d))) candidates.push_back(std::move(a));
    }
    std::size_t tried = 0;
    auto found = sum_decode_pass(y, obs, res.residual_users, code, candidates, round, options.max_iter, &tried);
    res.attempts += tried;
    res.round_attempts.push_back(tried);

    std::vector<std::pair<std::size_t, BitWord>> singles;
    for (auto& c : found) {
      accepted.insert(c.weights);
      if (c.weights.weight() == 1) singles.emplace_back(c.weights.first_set(), c.word);
      res.decoded.push_back(std::move(c));
    }

    if (options.propagate) {
      BitMatrix a(0, d);
      BitMatrix w(0, code.n());
      for (const auto& c : res.decoded) {
        a.append_row(c.weights);
        w.append_row(c.word);
      }
      const auto solved = solve_combinations(a, w);
      for (const auto& [u, word] : solved.unknowns) {
        const bool pending = std::ranges::find(res.residual_users, u) != res.residual_users.end();
        const bool fresh = std::ranges::none_of(singles, [&](const auto& s) { return s.first == u; });
        if (!pending || !fresh) continue;
        BitWord single(d);
        single.set(u, true);
        accepted.insert(single);
        const bool genie = genie_match(obs, single, word);
        res.decoded.push_back({single, word, 0, round, code.syndrome_ok(word), genie});
        singles.emplace_back(u, word);
      }
    }

    if (singles.empty()) break;
    for (const auto& [u, word] : singles) {
      y = cancel(y, obs.gains[u], word, obs.power);
      std::erase(res.residual_users, u);
    }
  }
  return res;
}

}  // namespace plnc
