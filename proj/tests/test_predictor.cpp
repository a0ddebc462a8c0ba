#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "plnc/predictor.hpp"

using namespace plnc;

namespace {

Dataset constant_dataset(std::size_t degree, const std::string& labels, std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.header.degree = degree;
  Rng rng(seed);
  std::uniform_real_distribution<double> g(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> gains(degree);
    for (auto& h : gains) h = g(rng);
    std::ranges::sort(gains, std::greater<>());
    data.samples.push_back({gains, BitWord::from_string(labels)});
  }
  return data;
}

// Degree-1 toy: small gains are labelled 0, large gains 1.
Dataset two_clusters(std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.header.degree = 1;
  Rng rng(seed);
  std::normal_distribution<double> lo(0.4, 0.1);
  std::normal_distribution<double> hi(1.6, 0.1);
  for (std::size_t i = 0; i < n; ++i) {
    const bool one = i % 2;
    data.samples.push_back({{one ? hi(rng) : lo(rng)}, BitWord::from_string(one ? "1" : "0")});
  }
  return data;
}

// Degree-2 toy whose first label is a threshold on the stronger gain.
Dataset threshold_rule(std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.header.degree = 2;
  Rng rng(seed);
  std::uniform_real_distribution<double> g(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> gains{g(rng), g(rng)};
    std::ranges::sort(gains, std::greater<>());
    BitWord labels(3);
    labels.set(0, gains[0] > 1.0);
    labels.set(1, gains[1] > 0.5);
    labels.set(2, gains[0] - gains[1] > 0.6);
    data.samples.push_back({gains, labels});
  }
  return data;
}

}  // namespace

TEST_SUITE("predictor") {
  TEST_CASE("shapes and zero model") {
    for (std::size_t d = 1; d <= 8; ++d) {
      const MlpModel zero(d);
      CHECK(zero.n_outputs() == (std::size_t{1} << d) - 1);
      CHECK(zero.layer_sizes() == std::vector<std::size_t>{d, 50, 50, 50, (std::size_t{1} << d) - 1});
      const std::vector<double> gains(d, 0.7);
      const auto p = zero.forward(gains);
      REQUIRE(p.size() == zero.n_outputs());
      for (double v : p) CHECK(v == 0.5);
    }
    CHECK(MlpModel(6).parameter_count() == (6 * 50 + 50) + 2 * (50 * 50 + 50) + (50 * 63 + 63));
    CHECK_THROWS_AS(MlpModel(0), DimensionError);
  }

  TEST_CASE("random model outputs are probabilities") {
    Rng rng(1);
    const auto model = MlpModel::random(4, rng);
    std::uniform_real_distribution<double> g(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> gains(4);
      for (auto& h : gains) h = g(rng);
      for (double v : model.forward(gains)) CHECK((v > 0.0 && v < 1.0));
    }
    for (const auto& layer : model.layers()) CHECK(layer.bias.isZero());
    CHECK_THROWS_AS((void)model.forward(std::vector<double>(3, 1.0)), DimensionError);
  }

  TEST_CASE("weight initialization variance") {
    Rng rng(2);
    const auto model = MlpModel::random(6, rng, 0.05);
    double s1 = 0.0;
    double s2 = 0.0;
    double n = 0.0;
    for (const auto& layer : model.layers()) {
      s1 += layer.weights.sum();
      s2 += layer.weights.squaredNorm();
      n += static_cast<double>(layer.weights.size());
    }
    CHECK(std::fabs(s1 / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(0.05).epsilon(0.05));
  }

  TEST_CASE("magnitude order") {
    CHECK(magnitude_order(std::vector<double>{0.2, -1.5, 0.9}) == std::vector<std::size_t>{1, 2, 0});
    CHECK(magnitude_order(std::vector<double>{0.5, -0.5, 0.5}) == std::vector<std::size_t>{0, 1, 2});
    CHECK(magnitude_order(std::vector<double>{}).empty());
  }

  TEST_CASE("constant labels are learned") {
    const auto data = constant_dataset(2, "101", 500, 3);
    TrainHyperparams hyper;
    hyper.steps = 10000;
    const auto model = train(data, hyper);
    for (std::size_t i = 0; i < 20; ++i) {
      const auto p = model.forward(data.samples[i].gains);
      CHECK(p[0] > 0.95);
      CHECK(p[1] < 0.05);
      CHECK(p[2] > 0.95);
    }
  }

  TEST_CASE("separable two-cluster problem") {
    const auto data = two_clusters(1000, 4);
    const auto test = two_clusters(1000, 5);
    TrainHyperparams hyper;
    hyper.steps = 3000;
    const auto model = train(data, hyper);
    std::size_t correct = 0;
    for (const auto& s : test.samples) correct += (model.forward(s.gains)[0] >= 0.5) == s.labels.get(0);
    CHECK(correct > 950);
  }

  TEST_CASE("training is deterministic and seed dependent") {
    const auto data = threshold_rule(300, 6);
    TrainHyperparams hyper;
    hyper.steps = 300;
    CHECK(train(data, hyper) == train(data, hyper));
    auto other = hyper;
    other.seed = 2;
    CHECK_FALSE(train(data, hyper) == train(data, other));
  }

  TEST_CASE("held-out loss decreases") {
    const auto data = threshold_rule(4000, 7);
    const auto held = threshold_rule(1000, 8);
    TrainHyperparams hyper;
    hyper.steps = 4000;
    hyper.checkpoints = 4;
    TrainReport report;
    const auto model = train(data, hyper, &report, &held);
    REQUIRE(report.losses.size() == 5);
    REQUIRE(report.validation_losses.size() == 5);
    CHECK(report.validation_losses.back() < report.validation_losses.front());
    CHECK(report.validation_losses.back() == doctest::Approx(mean_loss(model, held)));
    CHECK(report.losses.back() < 0.5 * report.losses.front());
  }

  TEST_CASE("gradient check") {
    Rng rng(9);
    for (std::size_t d : {1U, 3U, 5U}) {
      const auto model = MlpModel::random(d, rng, 0.2, {12, 9});
      std::uniform_real_distribution<double> g(0.1, 2.0);
      std::vector<double> gains(d);
      for (auto& h : gains) h = g(rng);
      std::ranges::sort(gains, std::greater<>());
      BitWord labels((std::size_t{1} << d) - 1);
      for (std::size_t i = 0; i < labels.size(); ++i) labels.set(i, rng() % 2);
      const TrainingSample sample{gains, labels};
      CHECK(gradient_check(model, sample) < 1e-4);
      CHECK(gradient_check(model, sample, 1.01) > 1e-3);
    }
  }

  TEST_CASE("gradient check skips steps across a ReLU kink") {
    // The single hidden unit sits 1e-7 above zero.
    std::vector<DenseLayer> layers(2);
    layers[0].weights = Eigen::MatrixXd::Constant(1, 1, 1.0);
    layers[0].bias = Eigen::VectorXd::Constant(1, -0.5 + 1e-7);
    layers[1].weights = Eigen::MatrixXd::Constant(1, 1, 2.0);
    layers[1].bias = Eigen::VectorXd::Constant(1, 0.3);
    const auto model = MlpModel::from_layers(1, layers);
    const TrainingSample sample{{0.5}, BitWord::from_string("1")};
    CHECK(gradient_check(model, sample) < 1e-4);
  }

  TEST_CASE("zero model and zero input give finite gradients") {
    const MlpModel zero(3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4);
    Eigen::MatrixXd s = Eigen::MatrixXd::Ones(7, 4);
    std::vector<DenseLayer> grad;
    const double loss = loss_and_gradient(zero, x, s, &grad);
    CHECK(loss == doctest::Approx(7.0 * std::log(2.0)));
    REQUIRE(grad.size() == zero.layers().size());
    for (const auto& g : grad) {
      CHECK(g.weights.allFinite());
      CHECK(g.bias.allFinite());
    }
    CHECK(grad.back().bias.isApproxToConstant(-0.5));
  }

  TEST_CASE("model text round trip") {
    Rng rng(10);
    const auto model = MlpModel::random(5, rng);
    std::stringstream buf;
    write_model(buf, model);
    const auto text = buf.str();
    const auto back = read_model(buf);
    CHECK(back == model);
    std::uniform_real_distribution<double> g(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> gains(5);
      for (auto& h : gains) h = g(rng);
      CHECK(back.forward(gains) == model.forward(gains));
    }
    std::stringstream truncated(text.substr(0, text.size() * 2 / 3));
    CHECK_THROWS_AS(read_model(truncated), FormatError);
    std::stringstream junk("not a model");
    CHECK_THROWS_AS(read_model(junk), FormatError);
  }

  TEST_CASE("predictor bank") {
    const auto dir = std::filesystem::temp_directory_path() / "plnc_bank_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    Rng rng(11);
    save_model((dir / PredictorBank::file_name(2)).string(), MlpModel::random(2, rng));
    save_model((dir / PredictorBank::file_name(4)).string(), MlpModel::random(4, rng));
    const auto bank = PredictorBank::load_dir(dir.string());
    CHECK(bank.degrees() == std::vector<std::size_t>{2, 4});
    CHECK(bank.at(4).degree() == 4);
    CHECK_THROWS_AS((void)bank.at(3), DimensionError);

    save_model((dir / PredictorBank::file_name(3)).string(), MlpModel::random(5, rng));
    CHECK_THROWS_AS(PredictorBank::load_dir(dir.string()), FormatError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("hyperparameter validation") {
    TrainHyperparams h;
    h.steps = 0;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h = {};
    h.learning_rate = 0.0;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    CHECK_THROWS_AS(train(Dataset{}, TrainHyperparams{}), std::invalid_argument);
  }
}
