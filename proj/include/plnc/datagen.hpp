#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "plnc/dataset.hpp"
#include "plnc/ldpc.hpp"
#include "plnc/phy.hpp"
#include "plnc/predictor.hpp"

namespace plnc {

struct DatagenConfig {
  std::size_t degree = 6;
  std::size_t samples = 100000;
  double snr_db = 10.0;
  FadingSpec fading = FadingSpec::rician(0.9);
  std::uint64_t seed = 1;
  int max_iter = kDefaultBpIterations;
  std::size_t threads = 1;

  void validate() const;
};

/// Simulates one collision of `degree` users and labels every combination
/// a(1) .. a(2^d - 1), each decoded independently on the raw received
/// signal, by whether BP returned exactly the true XOR codeword. Gains are
/// stored by decreasing |h| and label indices refer to that order. Sample i
/// uses its own derived stream, so the result does not depend on `threads`.
Dataset generate_dataset(const DatagenConfig& cfg, const LdpcCode& code);

/// Draws sample `index` of a dataset in isolation.
TrainingSample generate_sample(const DatagenConfig& cfg, const LdpcCode& code, std::uint64_t index);

/// Confusion counts of a thresholded classifier against labels.
struct ClassifierMetrics {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;  // label 0, predicted 1
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;  // label 1, predicted 0

  [[nodiscard]] std::size_t positives() const { return true_positive + false_negative; }
  [[nodiscard]] std::size_t negatives() const { return true_negative + false_positive; }
  /// False-alarm rate; empty when the data hold no negative labels.
  [[nodiscard]] std::optional<double> p_fa() const;
  /// Missed-detection rate; empty when the data hold no positive labels.
  [[nodiscard]] std::optional<double> p_md() const;

  ClassifierMetrics& operator+=(const ClassifierMetrics& o);
};

using Predictor = std::function<PredictionVector(std::span<const double>)>;

/// A combination is predicted decodable when its probability is >= tau.
ClassifierMetrics evaluate(const Predictor& predict, const Dataset& data, double tau = 0.5);
ClassifierMetrics evaluate(const MlpModel& model, const Dataset& data, double tau = 0.5);
/// Throws DimensionError if the bank has no model of the dataset's degree.
ClassifierMetrics evaluate(const PredictorBank& bank, const Dataset& data, double tau = 0.5);

}  // namespace plnc
