#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "plnc/datagen.hpp"

using namespace plnc;

namespace {

std::size_t positives(const Dataset& data) {
  std::size_t k = 0;
  for (const auto& s : data.samples) k += s.labels.weight();
  return k;
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("single users at high SNR are labelled decodable") {
    DatagenConfig cfg;
    cfg.degree = 1;
    cfg.samples = 300;
    cfg.snr_db = 30.0;
    const auto data = generate_dataset(cfg, LdpcCode::default_code());
    CHECK(data.samples.size() == 300);
    CHECK(static_cast<double>(positives(data)) > 0.99 * 300);
  }

  TEST_CASE("degree-6 labels are mixed and gains sorted") {
    DatagenConfig cfg;
    cfg.degree = 6;
    cfg.samples = 40;
    cfg.threads = 2;
    const auto data = generate_dataset(cfg, LdpcCode::default_code());
    const auto k = positives(data);
    CHECK(k > 0);
    CHECK(k < 40 * 63);
    for (const auto& s : data.samples) {
      CHECK(s.gains.size() == 6);
      CHECK(s.labels.size() == 63);
      for (std::size_t l = 1; l < 6; ++l) CHECK(std::fabs(s.gains[l - 1]) >= std::fabs(s.gains[l]));
    }
  }

  TEST_CASE("generation is reproducible and thread-count independent") {
    DatagenConfig cfg;
    cfg.degree = 3;
    cfg.samples = 60;
    cfg.threads = 1;
    const auto& code = LdpcCode::default_code();
    const auto serial = generate_dataset(cfg, code);
    cfg.threads = 4;
    const auto parallel = generate_dataset(cfg, code);
    REQUIRE(serial.samples.size() == parallel.samples.size());
    for (std::size_t i = 0; i < serial.samples.size(); ++i) {
      CHECK(serial.samples[i].gains == parallel.samples[i].gains);
      CHECK(serial.samples[i].labels == parallel.samples[i].labels);
    }
    const auto single = generate_sample(cfg, code, 17);
    CHECK(single.gains == serial.samples[17].gains);
    CHECK(single.labels == serial.samples[17].labels);
    cfg.seed = 2;
    CHECK(generate_sample(cfg, code, 17).gains != single.gains);
  }

  TEST_CASE("configuration checks") {
    DatagenConfig cfg;
    cfg.degree = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.degree = 9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.samples = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("classifier metrics") {
    Dataset data;
    data.header.degree = 2;
    data.samples.push_back({{1.0, 0.5}, BitWord::from_string("100")});
    data.samples.push_back({{0.9, 0.1}, BitWord::from_string("110")});

    auto perfect = [&](std::span<const double> g) {
      const auto& s = g[1] == 0.5 ? data.samples[0] : data.samples[1];
      PredictionVector p(3);
      for (std::size_t i = 0; i < 3; ++i) p[i] = s.labels.get(i) ? 0.8 : 0.2;
      return p;
    };
    const auto m = evaluate(perfect, data);
    CHECK(m.p_fa().value() == 0.0);
    CHECK(m.p_md().value() == 0.0);
    CHECK(m.positives() == 3);
    CHECK(m.negatives() == 3);

    auto always = [](std::span<const double>) { return PredictionVector(3, 1.0); };
    const auto one = evaluate(always, data);
    CHECK(one.p_fa().value() == 1.0);
    CHECK(one.p_md().value() == 0.0);

    auto never = [](std::span<const double>) { return PredictionVector(3, 0.0); };
    const auto zero = evaluate(never, data, 0.5);
    CHECK(zero.p_fa().value() == 0.0);
    CHECK(zero.p_md().value() == 1.0);

    Dataset all_ones = data;
    for (auto& s : all_ones.samples) s.labels = BitWord::from_string("111");
    CHECK_FALSE(evaluate(always, all_ones).p_fa().has_value());
    Dataset all_zero = data;
    for (auto& s : all_zero.samples) s.labels = BitWord(3);
    CHECK_FALSE(evaluate(always, all_zero).p_md().has_value());

    auto narrow = [](std::span<const double>) { return PredictionVector(2, 1.0); };
    CHECK_THROWS_AS(evaluate(narrow, data), DimensionError);
    CHECK_THROWS_AS(evaluate(MlpModel(3), data), DimensionError);
    CHECK_THROWS_AS(evaluate(PredictorBank{}, data), DimensionError);
  }

  TEST_CASE("metrics do not depend on sample order") {
    DatagenConfig cfg;
    cfg.degree = 2;
    cfg.samples = 200;
    cfg.snr_db = 5.0;
    auto data = generate_dataset(cfg, LdpcCode::default_code());
    Rng rng(3);
    const auto model = MlpModel::random(2, rng, 0.5);
    const auto before = evaluate(model, data, 0.4);
    std::ranges::shuffle(data.samples, rng);
    const auto after = evaluate(model, data, 0.4);
    CHECK(before.true_positive == after.true_positive);
    CHECK(before.false_positive == after.false_positive);
    CHECK(before.true_negative == after.true_negative);
    CHECK(before.false_negative == after.false_negative);
    CHECK(before.positives() + before.negatives() == 600);
  }

  TEST_CASE("dataset file round trip") {
    DatagenConfig cfg;
    cfg.degree = 3;
    cfg.samples = 25;
    cfg.fading = FadingSpec::rayleigh();
    cfg.snr_db = 7.25;
    const auto data = generate_dataset(cfg, LdpcCode::default_code());
    std::stringstream buf;
    write_dataset(buf, data);
    const auto text = buf.str();
    const auto back = read_dataset(buf);
    CHECK(back.header.degree == 3);
    CHECK(back.header.snr_db == 7.25);
    CHECK(back.header.fading == FadingSpec::rayleigh());
    CHECK(back.header.seed == cfg.seed);
    REQUIRE(back.samples.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(back.samples[i].gains == data.samples[i].gains);
      CHECK(back.samples[i].labels == data.samples[i].labels);
    }

    const auto path = (std::filesystem::temp_directory_path() / "plnc_dataset_test.txt").string();
    save_dataset(path, data);
    CHECK(load_dataset(path).samples.size() == 25);
    std::filesystem::remove(path);

    std::stringstream truncated(text.substr(0, text.size() - 40));
    CHECK_THROWS_AS(read_dataset(truncated), FormatError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_dataset(empty), FormatError);
    std::stringstream bad_label("# plnc-dataset v1 degree=1 samples=1 snr_db=1 fading=rayleigh seed=1 max_iter=100\n0.5\t2\n");
    CHECK_THROWS_AS(read_dataset(bad_label), FormatError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/data.txt"), std::runtime_error);
  }

  TEST_CASE("shortest decimal formatting round trips") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
      const double v = g(rng);
      CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
  }
}
