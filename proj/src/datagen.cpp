#include "plnc/datagen.hpp"

#include <stdexcept>
#include <string>

#include "plnc/parallel.hpp"

namespace plnc {

void DatagenConfig::validate() const {
  if (degree < 1 || degree > kDefaultMaxDegree) {
    throw std::invalid_argument("degree must lie in [1, " + std::to_string(kDefaultMaxDegree) + "]");
  }
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  if (max_iter < 1) throw std::invalid_argument("BP iteration limit must be at least 1");
}

TrainingSample generate_sample(const DatagenConfig& cfg, const LdpcCode& code, std::uint64_t index) {
  const double power = power_from_snr_db(cfg.snr_db);
  const std::size_t d = cfg.degree;
  Rng gain_rng = derive_seed(cfg.seed, d, index, StreamRole::kGains);
  Rng msg_rng = derive_seed(cfg.seed, d, index, StreamRole::kMessages);
  Rng noise_rng = derive_seed(cfg.seed, d, index, StreamRole::kNoise);

  const auto raw_gains = sample_gains(cfg.fading, d, gain_rng);
  const auto order = magnitude_order(raw_gains);
  std::vector<double> gains(d);
  std::vector<BitWord> codewords;
  std::bernoulli_distribution coin(0.5);
  std::vector<BitWord> messages;
  for (std::size_t l = 0; l < d; ++l) {
    BitWord m(code.k());
    for (std::size_t b = 0; b < code.k(); ++b) m.set(b, coin(msg_rng));
    messages.push_back(std::move(m));
  }
  std::vector<std::size_t> users(d);
  for (std::size_t l = 0; l < d; ++l) {
    gains[l] = raw_gains[order[l]];
    codewords.push_back(code.encode(messages[order[l]]));
    users[l] = l;
  }
  const auto obs = synth_slot(codewords, gains, users, power, noise_rng);

  TrainingSample sample{gains, BitWord((std::size_t{1} << d) - 1)};
  const ComboLikelihood likelihood(obs.y, obs.gains, power, d);
  BpDecoder decoder(code);
  for (std::uint64_t i = 1; i < (std::uint64_t{1} << d); ++i) {
    const auto a = binary_expansion(i, d);
    const auto out = decoder.decode(likelihood.llr(a), cfg.max_iter);
    sample.labels.set(i - 1, out.word == xor_accumulate(obs.genie_codewords, a));
  }
  return sample;
}

Dataset generate_dataset(const DatagenConfig& cfg, const LdpcCode& code) {
  cfg.validate();
  Dataset data;
  data.header = {cfg.degree, cfg.snr_db, cfg.fading, cfg.seed, cfg.max_iter};
  data.samples.resize(cfg.samples);
  parallel_for(cfg.samples, cfg.threads, [&](std::size_t i) { data.samples[i] = generate_sample(cfg, code, i); });
  return data;
}

std::optional<double> ClassifierMetrics::p_fa() const {
  if (negatives() == 0) return std::nullopt;
  return static_cast<double>(false_positive) / static_cast<double>(negatives());
}

std::optional<double> ClassifierMetrics::p_md() const {
  if (positives() == 0) return std::nullopt;
  return static_cast<double>(false_negative) / static_cast<double>(positives());
}

ClassifierMetrics& ClassifierMetrics::operator+=(const ClassifierMetrics& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  true_negative += o.true_negative;
  false_negative += o.false_negative;
  return *this;
}

ClassifierMetrics evaluate(const Predictor& predict, const Dataset& data, double tau) {
  ClassifierMetrics m;
  for (const auto& s : data.samples) {
    const auto p = predict(s.gains);
    if (p.size() != s.labels.size()) throw DimensionError("evaluate: prediction width differs from label width");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool predicted = p[i] >= tau;
      if (s.labels.get(i)) {
        ++(predicted ? m.true_positive : m.false_negative);
      } else {
        ++(predicted ? m.false_positive : m.true_negative);
      }
    }
  }
  return m;
}

ClassifierMetrics evaluate(const MlpModel& model, const Dataset& data, double tau) {
  if (model.degree() != data.degree()) {
    throw DimensionError("evaluate: degree-" + std::to_string(model.degree()) + " model on degree-" +
                         std::to_string(data.degree()) + " data");
  }
  return evaluate([&](std::span<const double> g) { return model.forward(g); }, data, tau);
}

ClassifierMetrics evaluate(const PredictorBank& bank, const Dataset& data, double tau) {
  return evaluate(bank.at(data.degree()), data, tau);
}

}  // namespace plnc
