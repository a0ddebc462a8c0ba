#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "plnc/slot_decoder.hpp"

using namespace plnc;

namespace {

SlotObservation random_slot(std::size_t d, double snr_db, const FadingSpec& fading, Rng& rng, bool noiseless = false) {
  const auto& code = LdpcCode::default_code();
  std::vector<BitWord> cws;
  std::vector<std::size_t> users;
  std::uniform_int_distribution<int> bit(0, 1);
  for (std::size_t l = 0; l < d; ++l) {
    BitWord m(code.k());
    for (std::size_t b = 0; b < code.k(); ++b) m.set(b, bit(rng));
    cws.push_back(code.encode(m));
    users.push_back(10 + 3 * l);
  }
  return synth_slot(cws, sample_gains(fading, d, rng), users, power_from_snr_db(snr_db), rng, noiseless);
}

std::set<std::size_t> singles(const SlotResult& r) {
  std::set<std::size_t> out;
  for (const auto& c : r.decoded) {
    if (c.weights.weight() == 1) out.insert(c.weights.first_set());
  }
  return out;
}

}  // namespace

TEST_SUITE("slot_decoder") {
  TEST_CASE("policy parsing") {
    CHECK(SelectionPolicy::parse("exhaustive") == SelectionPolicy::exhaustive());
    CHECK(SelectionPolicy::parse("sic") == SelectionPolicy::sic_only());
    CHECK(SelectionPolicy::parse("dnn:0.5") == SelectionPolicy::threshold_at(0.5));
    CHECK(SelectionPolicy::parse("top:3") == SelectionPolicy::top_nu(3));
    CHECK(SelectionPolicy::parse(SelectionPolicy::threshold_at(0.25).to_string()) == SelectionPolicy::threshold_at(0.25));
    CHECK_THROWS_AS(SelectionPolicy::parse("dnn:1.5"), std::invalid_argument);
    CHECK_THROWS_AS(SelectionPolicy::parse("top:0"), std::invalid_argument);
    CHECK_THROWS_AS(SelectionPolicy::parse("dnn:"), std::invalid_argument);
    CHECK_THROWS_AS(SelectionPolicy::parse("greedy"), std::invalid_argument);
  }

  TEST_CASE("selection examples") {
    const std::vector<double> p{0.9, 0.2, 0.6};
    const auto tau = select_combinations(p, SelectionPolicy::threshold_at(0.5));
    CHECK(tau == std::vector<BitWord>{binary_expansion(1, 2), binary_expansion(3, 2)});
    CHECK(select_combinations(p, SelectionPolicy::top_nu(1)) == std::vector<BitWord>{binary_expansion(1, 2)});
    CHECK(select_combinations(p, SelectionPolicy::top_nu(10)).size() == 3);
    CHECK(select_combinations(p, SelectionPolicy::exhaustive()) == exhaustive_candidates(2));
    CHECK(select_combinations(p, SelectionPolicy::sic_only()) ==
          std::vector<BitWord>{BitWord::from_string("10"), BitWord::from_string("01")});
    CHECK(select_combinations(std::vector<double>{0.1, 0.2, 0.3}, SelectionPolicy::threshold_at(0.95)).empty());
    CHECK_THROWS_AS(select_combinations(std::vector<double>{0.1, 0.2}, SelectionPolicy::exhaustive()), DimensionError);
  }

  TEST_CASE("top-nu ties prefer the lower index") {
    const std::vector<double> p{0.4, 0.7, 0.7, 0.7, 0.1, 0.0, 0.7};
    const auto top = select_combinations(p, SelectionPolicy::top_nu(3));
    CHECK(top == std::vector<BitWord>{binary_expansion(2, 3), binary_expansion(3, 3), binary_expansion(4, 3)});
  }

  TEST_CASE("threshold selection matches a filter oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 1 + trial % 6;
      std::vector<double> p((std::size_t{1} << d) - 1);
      for (auto& v : p) v = u(rng);
      const double tau = 0.05 + 0.9 * u(rng);
      const auto picked = select_combinations(p, SelectionPolicy::threshold_at(tau));
      std::set<std::uint64_t> expected;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= tau) expected.insert(i + 1);
      }
      std::set<std::uint64_t> got;
      double last = 2.0;
      for (const auto& a : picked) {
        const auto i = binary_index(a);
        got.insert(i);
        CHECK(p[i - 1] <= last);
        last = p[i - 1];
      }
      CHECK(got == expected);
      CHECK(got.size() == picked.size());
    }
  }

  TEST_CASE("candidate lists") {
    CHECK(exhaustive_candidates(3).size() == 7);
    const auto sums = sum_decoding_candidates(3);
    CHECK(sums.size() == 4);
    for (const auto& a : sums) CHECK(a.weight() >= 2);
  }

  TEST_CASE("empty slot") {
    SlotObservation obs;
    obs.y.assign(128, 0.3);
    const auto r = decode_slot_iterative(obs, LdpcCode::default_code(), SelectionPolicy::exhaustive());
    CHECK(r.decoded.empty());
    CHECK(r.attempts == 0);
    CHECK(r.residual_users.empty());
  }

  TEST_CASE("single transmitter decodes in the first round") {
    Rng rng(2);
    const auto& code = LdpcCode::default_code();
    for (int trial = 0; trial < 20; ++trial) {
      const auto obs = random_slot(1, 10.0, FadingSpec::rician(0.9), rng);
      const auto r = decode_slot_iterative(obs, code, SelectionPolicy::exhaustive());
      REQUIRE(r.decoded.size() == 1);
      CHECK(r.decoded[0].iteration == 1);
      CHECK(r.decoded[0].weights == BitWord::from_string("1"));
      CHECK(r.decoded[0].genie_correct);
      CHECK(r.residual_users.empty());
      CHECK(r.attempts == 1);
    }
  }

  TEST_CASE("attempt counts") {
    Rng rng(3);
    const auto& code = LdpcCode::default_code();
    for (std::size_t d = 1; d <= 6; ++d) {
      const auto obs = random_slot(d, 0.0, FadingSpec::rayleigh(), rng);
      const auto r = decode_slot_iterative(obs, code, SelectionPolicy::exhaustive());
      REQUIRE_FALSE(r.round_attempts.empty());
      CHECK(r.round_attempts[0] == (std::size_t{1} << d) - 1);
      std::size_t total = 0;
      for (auto a : r.round_attempts) total += a;
      CHECK(total == r.attempts);
      CHECK(r.round_attempts.size() == r.rounds);
    }
    const auto obs = random_slot(3, 5.0, FadingSpec::rayleigh(), rng);
    const std::vector<std::size_t> all{0, 1, 2};
    std::size_t attempts = 0;
    sum_decode_pass(obs.y, obs, all, code, sum_decoding_candidates(3), 1, kDefaultBpIterations, &attempts);
    CHECK(attempts == 4);
    attempts = 0;
    CHECK(sum_decode_pass(obs.y, obs, all, code, {}, 1, kDefaultBpIterations, &attempts).empty());
    CHECK(attempts == 0);
  }

  TEST_CASE("noiseless pair yields the XOR combination") {
    Rng rng(4);
    const auto& code = LdpcCode::default_code();
    auto obs = random_slot(2, 10.0, FadingSpec::rician(0.9), rng, true);
    obs.gains = {1.0, 1.0};
    obs = synth_slot(obs.genie_codewords, obs.gains, obs.users, obs.power, rng, true);
    const std::vector<std::size_t> all{0, 1};
    const std::vector<BitWord> cand{BitWord::from_string("11")};
    const auto found = sum_decode_pass(obs.y, obs, all, code, cand, 1);
    REQUIRE(found.size() == 1);
    CHECK(found[0].word == (obs.genie_codewords[0] ^ obs.genie_codewords[1]));
    CHECK(found[0].genie_correct);
  }

  TEST_CASE("successive cancellation") {
    Rng rng(5);
    const auto& code = LdpcCode::default_code();
    int strong_ok = 0;
    int equal_fail = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      auto base = random_slot(2, 10.0, FadingSpec::rayleigh(), rng);
      const auto obs = synth_slot(base.genie_codewords, {0.1, 10.0}, base.users, 10.0, rng);
      const auto sic = sic_pass(obs, code);
      strong_ok += !sic.decoded.empty() && sic.decoded[0].weights == BitWord::from_string("01") &&
                   sic.decoded[0].genie_correct;
      const auto weak = synth_slot(base.genie_codewords, {1.0, 1.0}, base.users, 1.0, rng);
      const auto sic2 = sic_pass(weak, code);
      equal_fail += sic2.decoded.empty() && sic2.attempts == 1 && sic2.residual_users.size() == 2;
    }
    CHECK(strong_ok > trials * 99 / 100);
    CHECK(equal_fail > trials * 9 / 10);
  }

  TEST_CASE("individual decodes of sic-only are a subset of exhaustive") {
    Rng rng(6);
    const auto& code = LdpcCode::default_code();
    for (int trial = 0; trial < 60; ++trial) {
      const auto obs = random_slot(1 + trial % 4, 8.0, FadingSpec::rician(0.9), rng);
      const auto ex = decode_slot_iterative(obs, code, SelectionPolicy::exhaustive());
      const auto sic = decode_slot_iterative(obs, code, SelectionPolicy::sic_only());
      const auto ex_singles = singles(ex);
      for (auto u : singles(sic)) CHECK(ex_singles.contains(u));
      CHECK(sic.attempts <= ex.attempts);
    }
  }

  TEST_CASE("accepted decodes are almost always correct") {
    Rng rng(7);
    const auto& code = LdpcCode::default_code();
    std::size_t accepted = 0;
    std::size_t correct = 0;
    for (int trial = 0; trial < 250; ++trial) {
      const auto obs = random_slot(3, 10.0, FadingSpec::rician(0.9), rng);
      const auto r = decode_slot_iterative(obs, code, SelectionPolicy::exhaustive());
      std::set<BitWord> seen;
      for (const auto& c : r.decoded) {
        ++accepted;
        correct += c.genie_correct;
        CHECK(c.syndrome_ok);
        CHECK(code.syndrome_ok(c.word));
        CHECK(seen.insert(c.weights).second);
      }
    }
    REQUIRE(accepted > 500);
    CHECK(static_cast<double>(correct) > 0.999 * static_cast<double>(accepted));
  }

  TEST_CASE("capacity skip") {
    Rng rng(8);
    const auto obs = random_slot(3, 10.0, FadingSpec::rician(0.9), rng);
    SlotDecoderOptions opts;
    opts.max_degree = 2;
    const auto r = decode_slot_iterative(obs, LdpcCode::default_code(), SelectionPolicy::exhaustive(), nullptr, opts);
    CHECK(r.capacity_exceeded);
    CHECK(r.decoded.empty());
    CHECK(r.attempts == 0);
    CHECK(r.residual_users.size() == 3);
  }

  TEST_CASE("predictor outputs are mapped back to slot order") {
    // Bias-only model: only a(1) over the sorted gains, i.e. the strongest
    // user alone, is predicted decodable.
    MlpModel model(2);
    model.layers().back().bias = Eigen::Vector3d(6.0, -6.0, -6.0);
    PredictorBank bank;
    bank.add(model);
    Rng rng(9);
    const auto& code = LdpcCode::default_code();
    auto base = random_slot(2, 20.0, FadingSpec::rayleigh(), rng);
    const auto obs = synth_slot(base.genie_codewords, {0.3, 1.2}, base.users, base.power, rng);
    const auto r = decode_slot_iterative(obs, code, SelectionPolicy::threshold_at(0.5), &bank);
    REQUIRE_FALSE(r.round_attempts.empty());
    CHECK(r.round_attempts[0] == 1);
    REQUIRE_FALSE(r.decoded.empty());
    CHECK(r.decoded[0].weights == BitWord::from_string("01"));
    CHECK(r.decoded[0].genie_correct);

    CHECK_THROWS_AS(decode_slot_iterative(obs, code, SelectionPolicy::threshold_at(0.5), nullptr), std::invalid_argument);
    const auto three = random_slot(3, 10.0, FadingSpec::rayleigh(), rng);
    CHECK_THROWS_AS(decode_slot_iterative(three, code, SelectionPolicy::top_nu(2), &bank), DimensionError);
  }
}
