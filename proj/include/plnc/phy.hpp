#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plnc/gf2.hpp"
#include "plnc/ldpc.hpp"
#include "plnc/rng.hpp"

namespace plnc {

/// Raised when a collision is larger than the receiver is configured for.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxDegree = 8;

/// Real-valued fading gain law, normalized to E[h^2] = 1.
struct FadingSpec {
  enum class Kind { kRayleigh, kRician };

  Kind kind = Kind::kRayleigh;
  /// |E[h]|^2 / E[h^2], only meaningful for kRician; must lie in [0, 1).
  double rician_factor = 0.0;

  static FadingSpec rayleigh() { return {}; }
  static FadingSpec rician(double factor);
  /// Accepts "rayleigh" or "rician:<factor>".
  static FadingSpec parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const FadingSpec&, const FadingSpec&) = default;
};

/// Transmit power for a given average receive SNR per user (unit noise
/// variance, E[h^2] = 1).
double power_from_snr_db(double snr_db);

/// BPSK: bit 0 -> -sqrt(P), bit 1 -> +sqrt(P).
std::vector<double> modulate(const BitWord& u, double power);

/// Rayleigh: magnitude of a unit-power circular complex Gaussian.
/// Rician(k): sqrt(k) + sqrt(1 - k) * N(0, 1).
std::vector<double> sample_gains(const FadingSpec& spec, std::size_t count, Rng& rng);

/// Received payload of one slot together with the side information the
/// receiver is assumed to have (gains, identities) and the ground truth kept
/// for bookkeeping (genie codewords).
struct SlotObservation {
  std::vector<double> y;
  std::vector<double> gains;
  std::vector<std::size_t> users;
  std::vector<BitWord> genie_codewords;
  double power = 1.0;
};

/// y = sum_l h_l x(u_l) + z with z ~ N(0, 1) i.i.d. (z = 0 when noiseless).
SlotObservation synth_slot(std::vector<BitWord> codewords, std::vector<double> gains,
                           std::vector<std::size_t> users, double power, Rng& rng, bool noiseless = false);

/// y - h x(u).
std::vector<double> cancel(std::span<const double> y, double gain, const BitWord& u, double power);

/// Per-symbol LLR of one user treating everything else as Gaussian noise
/// of the given variance: -2 h sqrt(P) y / var, clipped.
LlrVector channel_llr_single(std::span<const double> y, double gain, double power, double noise_var = 1.0);

/// Joint-marginalization LLRs for XOR combinations of superimposed users.
///
/// For each symbol the likelihoods of all 2^d transmit-bit configurations are
/// evaluated once (max-normalized); the LLR for weight vector a is then
///   ln sum_{b : a.b = 0} p_b  -  ln sum_{b : a.b = 1} p_b.
/// Building costs O(n 2^d); each llr() call costs O(n 2^d) additions.
class ComboLikelihood {
 public:
  ComboLikelihood(std::span<const double> y, std::span<const double> gains, double power,
                  std::size_t max_degree = kDefaultMaxDegree);

  [[nodiscard]] std::size_t degree() const { return degree_; }
  [[nodiscard]] LlrVector llr(const BitWord& weights) const;

 private:
  std::size_t degree_;
  std::size_t configs_;
  std::vector<double> weights_;  // n x 2^d, row-major, max-normalized likelihoods
};

LlrVector channel_llr_combo(std::span<const double> y, std::span<const double> gains, double power,
                            const BitWord& weights, std::size_t max_degree = kDefaultMaxDegree);

}  // namespace plnc
