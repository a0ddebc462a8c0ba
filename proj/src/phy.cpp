#include "plnc/phy.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

namespace plnc {

FadingSpec FadingSpec::rician(double factor) {
  if (!(factor >= 0.0 && factor < 1.0)) throw std::invalid_argument("rician factor must lie in [0, 1)");
  return {Kind::kRician, factor};
}

FadingSpec FadingSpec::parse(std::string_view text) {
  if (text == "rayleigh") return rayleigh();
  constexpr std::string_view prefix = "rician:";
  if (text.starts_with(prefix)) {
    const auto value = text.substr(prefix.size());
    double factor = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), factor);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw std::invalid_argument("invalid rician factor: " + std::string(value));
    }
    return rician(factor);
  }
  throw std::invalid_argument("unknown fading spec '" + std::string(text) + "' (rayleigh | rician:<k>)");
}

std::string FadingSpec::to_string() const {
  if (kind == Kind::kRayleigh) return "rayleigh";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), rician_factor);
  return "rician:" + std::string(buf, res.ptr);
}

double power_from_snr_db(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

std::vector<double> modulate(const BitWord& u, double power) {
  const double amp = std::sqrt(power);
  std::vector<double> x(u.size());
  for (std::size_t t = 0; t < u.size(); ++t) x[t] = u.get(t) ? amp : -amp;
  return x;
}

std::vector<double> sample_gains(const FadingSpec& spec, std::size_t count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> h(count);
  for (auto& g : h) {
    if (spec.kind == FadingSpec::Kind::kRayleigh) {
      const double re = normal(rng);
      const double im = normal(rng);
      g = std::sqrt(0.5 * (re * re + im * im));
    } else {
      g = std::sqrt(spec.rician_factor) + std::sqrt(1.0 - spec.rician_factor) * normal(rng);
    }
  }
  return h;
}

SlotObservation synth_slot(std::vector<BitWord> codewords, std::vector<double> gains,
                           std::vector<std::size_t> users, double power, Rng& rng, bool noiseless) {
  if (codewords.size() != gains.size() || users.size() != gains.size()) {
    throw DimensionError("synth_slot: codeword, gain and user counts differ");
  }
  if (codewords.empty()) throw DimensionError("synth_slot: at least one transmitter required");
  const std::size_t n = codewords.front().size();
  SlotObservation obs;
  obs.y.assign(n, 0.0);
  const double amp = std::sqrt(power);
  for (std::size_t l = 0; l < codewords.size(); ++l) {
    if (codewords[l].size() != n) throw DimensionError("synth_slot: codeword lengths differ");
    if (!std::isfinite(gains[l])) throw std::invalid_argument("synth_slot: non-finite gain");
    for (std::size_t t = 0; t < n; ++t) obs.y[t] += gains[l] * (codewords[l].get(t) ? amp : -amp);
  }
  if (!noiseless) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : obs.y) v += normal(rng);
  }
  obs.gains = std::move(gains);
  obs.users = std::move(users);
  obs.genie_codewords = std::move(codewords);
  obs.power = power;
  return obs;
}

std::vector<double> cancel(std::span<const double> y, double gain, const BitWord& u, double power) {
  if (u.size() != y.size()) throw DimensionError("cancel: codeword length differs from signal length");
  const double amp = gain * std::sqrt(power);
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] -= u.get(t) ? amp : -amp;
  return out;
}

LlrVector channel_llr_single(std::span<const double> y, double gain, double power, double noise_var) {
  const double scale = -2.0 * gain * std::sqrt(power) / noise_var;
  LlrVector llr(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) llr[t] = std::clamp(scale * y[t], -kLlrClip, kLlrClip);
  return llr;
}

ComboLikelihood::ComboLikelihood(std::span<const double> y, std::span<const double> gains, double power,
                                 std::size_t max_degree)
    : degree_(gains.size()), configs_(std::size_t{1} << gains.size()) {
  if (degree_ == 0) throw DimensionError("ComboLikelihood: no transmitters");
  if (degree_ > max_degree) {
    throw CapacityError("collision degree " + std::to_string(degree_) + " exceeds limit " +
                        std::to_string(max_degree));
  }
  const double amp = std::sqrt(power);
  // Noiseless superposition for every bit configuration b (bit l of b = user l).
  std::vector<double> level(configs_, 0.0);
  for (std::size_t b = 0; b < configs_; ++b) {
    for (std::size_t l = 0; l < degree_; ++l) level[b] += gains[l] * (((b >> l) & 1U) ? amp : -amp);
  }
  weights_.resize(y.size() * configs_);
  std::vector<double> metric(configs_);
  for (std::size_t t = 0; t < y.size(); ++t) {
    double best = -INFINITY;
    for (std::size_t b = 0; b < configs_; ++b) {
      const double diff = y[t] - level[b];
      metric[b] = -0.5 * diff * diff;
      best = std::max(best, metric[b]);
    }
    double* row = &weights_[t * configs_];
    for (std::size_t b = 0; b < configs_; ++b) row[b] = std::exp(metric[b] - best);
  }
}

LlrVector ComboLikelihood::llr(const BitWord& weights) const {
  if (weights.size() != degree_) throw DimensionError("ComboLikelihood::llr: weight length differs from degree");
  const std::uint64_t mask = binary_index(weights);
  if (mask == 0) throw std::invalid_argument("ComboLikelihood::llr: all-zero weight vector");
  std::vector<unsigned char> odd(configs_);
  for (std::size_t b = 0; b < configs_; ++b) odd[b] = static_cast<unsigned char>(std::popcount(b & mask) & 1);

  const std::size_t n = weights_.size() / configs_;
  LlrVector out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double* row = &weights_[t * configs_];
    double sum[2] = {0.0, 0.0};
    for (std::size_t b = 0; b < configs_; ++b) sum[odd[b]] += row[b];
    double v = 0.0;
    if (sum[1] == 0.0) {
      v = kLlrClip;
    } else if (sum[0] == 0.0) {
      v = -kLlrClip;
    } else {
      v = std::log(sum[0]) - std::log(sum[1]);
    }
    out[t] = std::clamp(v, -kLlrClip, kLlrClip);
  }
  return out;
}

LlrVector channel_llr_combo(std::span<const double> y, std::span<const double> gains, double power,
                            const BitWord& weights, std::size_t max_degree) {
  if (weights.weight() == 0) throw std::invalid_argument("channel_llr_combo: all-zero weight vector");
  return ComboLikelihood(y, gains, power, max_degree).llr(weights);
}

}  // namespace plnc
