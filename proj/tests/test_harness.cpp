#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>

#include "plnc/harness.hpp"
#include "plnc/parallel.hpp"

using namespace plnc;

namespace {

FrameSweepConfig small_sweep() {
  FrameSweepConfig cfg;
  cfg.replicas = {2};
  cfg.slots_per_frame = {4, 8};
  cfg.policies = {SelectionPolicy::exhaustive(), SelectionPolicy::sic_only()};
  cfg.frames = 12;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("result table format") {
    ResultTable t;
    t.add_config("experiment", "demo");
    t.add_rate("a", "loss", 1, 4);
    t.add_count("a", "errors", 9, 100);
    t.add({"b", "mean", 2.5, 10, 0.25});
    const std::string expected =
        "# experiment=demo\n"
        "point,metric,value,samples,stderr\n"
        "a,loss,0.25,4,0.21650635094610965\n"
        "a,errors,9,100,3\n"
        "b,mean,2.5,10,0.25\n";
    CHECK(t.to_string() == expected);
    REQUIRE(t.find("a", "errors") != nullptr);
    CHECK(t.find("a", "errors")->value == 9.0);
    CHECK(t.find("b", "loss") == nullptr);
  }

  TEST_CASE("mean accumulator") {
    MeanAccumulator m;
    CHECK(m.mean() == 0.0);
    for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
    CHECK(m.mean() == doctest::Approx(2.5));
    CHECK(m.std_error() == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  }

  TEST_CASE("zero frames yield a header-only table") {
    auto cfg = small_sweep();
    cfg.frames = 0;
    const auto t = run_frame_sweep(cfg, LdpcCode::default_code());
    CHECK(t.rows().empty());
    CHECK_FALSE(t.config().empty());
  }

  TEST_CASE("seed derivation") {
    CHECK(mix_seed(1, 2, 3, 4) == mix_seed(1, 2, 3, 4));
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 4; ++m) {
      for (std::uint64_t a = 0; a < 4; ++a) {
        for (std::uint64_t b = 0; b < 4; ++b) {
          for (std::uint64_t r = 1; r <= 6; ++r) seen.insert(mix_seed(m, a, b, r));
        }
      }
    }
    CHECK(seen.size() == 4 * 4 * 4 * 6);
    auto x = derive_seed(9, 1, 2, StreamRole::kNoise);
    auto y = derive_seed(9, 1, 2, StreamRole::kNoise);
    auto z = derive_seed(9, 1, 2, StreamRole::kGains);
    const auto vx = x();
    CHECK(vx == y());
    CHECK(vx != z());
  }

  TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::ranges::all_of(hits, [](int h) { return h == 1; }));
    std::atomic<int> calls{0};
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [&](std::size_t i) {
                                   ++calls;
                                   if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK_THROWS_AS(parallel_for(5, 1, [](std::size_t) { throw std::logic_error("serial"); }), std::logic_error);
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
  }

  TEST_CASE("frame sweep output is independent of thread count") {
    auto cfg = small_sweep();
    cfg.threads = 1;
    const auto serial = run_frame_sweep(cfg, LdpcCode::default_code());
    cfg.threads = 4;
    const auto parallel = run_frame_sweep(cfg, LdpcCode::default_code());
    CHECK(serial == parallel);
    CHECK(serial.rows().size() == 2 * 2 * 5);
    CHECK(serial.find("r=2;tf=4;policy=exhaustive", "packet_loss") != nullptr);
  }

  TEST_CASE("slot histogram is independent of thread count") {
    SlotHistogramConfig cfg;
    cfg.collision = 3;
    cfg.slots = 40;
    cfg.threads = 1;
    const auto serial = run_slot_histogram(cfg, LdpcCode::default_code());
    cfg.threads = 3;
    CHECK(serial == run_slot_histogram(cfg, LdpcCode::default_code()));
    const auto h = simulate_slot_histogram(cfg, LdpcCode::default_code());
    CHECK(h.genie.size() == 3);
    CHECK(h.first_round_attempts == 40 * 7);
    CHECK(h.iteration_total(1) <= h.iteration_total(1, false));
    CHECK(h.iteration_total(9) == 0);
  }

  TEST_CASE("policies share traffic and noise frame by frame") {
    auto cfg = small_sweep();
    const auto& code = LdpcCode::default_code();
    for (std::uint64_t f = 0; f < 30; ++f) {
      const auto ex = simulate_frame(cfg, 2, 6, SelectionPolicy::exhaustive(), f, code, nullptr);
      const auto sic = simulate_frame(cfg, 2, 6, SelectionPolicy::sic_only(), f, code, nullptr);
      CHECK(ex.loss.total == sic.loss.total);
      CHECK(ex.loss.lost <= sic.loss.lost);
      for (const auto& [pos, _] : sic.result.recovered) CHECK(ex.result.recovered.contains(pos));
    }
  }

  TEST_CASE("points with r above T_f are skipped") {
    FrameSweepConfig cfg;
    cfg.replicas = {1, 3};
    cfg.slots_per_frame = {2, 3};
    cfg.frames = 2;
    const auto points = simulate_frame_sweep(cfg, LdpcCode::default_code());
    REQUIRE(points.size() == 3);
    for (const auto& p : points) CHECK(p.replicas <= p.slots_per_frame);
    cfg.policies = {SelectionPolicy::threshold_at(0.5)};
    CHECK_THROWS_AS(simulate_frame_sweep(cfg, LdpcCode::default_code()), std::invalid_argument);
  }

  TEST_CASE("classifier table") {
    ClassifierMetrics m;
    m.true_positive = 3;
    m.false_negative = 1;
    const auto t = classifier_table(m, 2, 0.5);
    CHECK(std::isnan(t.find("degree=2", "p_fa")->value));
    CHECK(t.find("degree=2", "p_md")->value == doctest::Approx(0.25));
  }
}
