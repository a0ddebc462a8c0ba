#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plnc/datagen.hpp"
#include "plnc/frame_decoder.hpp"
#include "plnc/ldpc.hpp"
#include "plnc/phy.hpp"
#include "plnc/predictor.hpp"
#include "plnc/slot_decoder.hpp"

namespace plnc {

struct ResultRow {
  std::string point;
  std::string metric;
  double value = 0.0;
  std::size_t samples = 0;
  double std_error = 0.0;
};

/// Experiment output: '#'-prefixed key=value config lines followed by a
/// comma-separated table with header "point,metric,value,samples,stderr".
class ResultTable {
 public:
  void add_config(std::string key, std::string value);
  void add(ResultRow row);
  /// Rate k/n with binomial standard error.
  void add_rate(const std::string& point, const std::string& metric, std::size_t hits, std::size_t n);
  /// Event count with Poisson standard error.
  void add_count(const std::string& point, const std::string& metric, std::size_t count, std::size_t n);

  [[nodiscard]] const std::vector<ResultRow>& rows() const { return rows_; }
  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& config() const { return config_; }
  [[nodiscard]] const ResultRow* find(const std::string& point, const std::string& metric) const;

  void write(std::ostream& out) const;
  [[nodiscard]] std::string to_string() const;
  void save(const std::string& path) const;

  friend bool operator==(const ResultTable&, const ResultTable&);

 private:
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<ResultRow> rows_;
};

/// Running mean and standard error of a sample.
struct MeanAccumulator {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  [[nodiscard]] double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  [[nodiscard]] double std_error() const;
};

struct SlotHistogramConfig {
  std::size_t collision = 6;
  std::size_t slots = 400000;
  double snr_db = 15.0;
  FadingSpec fading = FadingSpec::rayleigh();
  SelectionPolicy policy = SelectionPolicy::exhaustive();
  SlotDecoderOptions decoder;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

/// Success counts indexed [iteration - 1][combination degree - 1].
struct SlotHistogram {
  std::size_t slots = 0;
  std::size_t collision = 0;
  std::size_t rounds = 0;
  std::vector<std::vector<std::size_t>> genie;
  std::vector<std::vector<std::size_t>> syndrome;
  MeanAccumulator attempts;
  /// Attempts made in the first round, summed over slots.
  std::size_t first_round_attempts = 0;
  std::size_t undetected_errors = 0;

  [[nodiscard]] std::size_t iteration_total(std::size_t iteration, bool genie_counts = true) const;
};

/// Decodes `slots` independent collisions of fixed degree.
SlotHistogram simulate_slot_histogram(const SlotHistogramConfig& cfg, const LdpcCode& code,
                                      const PredictorBank* bank = nullptr);
ResultTable run_slot_histogram(const SlotHistogramConfig& cfg, const LdpcCode& code,
                               const PredictorBank* bank = nullptr);

struct FrameSweepConfig {
  std::size_t active = 6;
  std::size_t total_users = 64;
  std::vector<std::size_t> replicas = {2};
  std::vector<std::size_t> slots_per_frame = {4, 8, 12};
  std::vector<SelectionPolicy> policies = {SelectionPolicy::exhaustive()};
  std::size_t frames = 5000;
  double snr_db = 10.0;
  FadingSpec fading = FadingSpec::rician(0.9);
  SlotDecoderOptions decoder;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

struct FramePoint {
  std::size_t replicas = 0;
  std::size_t slots_per_frame = 0;
  SelectionPolicy policy;
  LossCount loss;
  MeanAccumulator attempts_per_slot;
  std::size_t frames = 0;
  std::size_t conflicts = 0;
  std::size_t wrong_recoveries = 0;
  std::size_t capacity_skips = 0;

  [[nodiscard]] std::string label() const;
  [[nodiscard]] double loss_std_error() const;
};

/// Frame-level packet loss for every (r, T_f, policy) with r <= T_f. All
/// policies at the same (r, T_f) see the same traffic, gains, packets and
/// noise.
std::vector<FramePoint> simulate_frame_sweep(const FrameSweepConfig& cfg, const LdpcCode& code,
                                             const PredictorBank* bank = nullptr);
ResultTable run_frame_sweep(const FrameSweepConfig& cfg, const LdpcCode& code, const PredictorBank* bank = nullptr);

/// One frame simulated and decoded end to end.
struct FrameOutcome {
  LossCount loss;
  FrameResult result;
  std::size_t attempts = 0;
  std::size_t slots = 0;
  std::size_t wrong_recoveries = 0;
  std::size_t capacity_skips = 0;
};

FrameOutcome simulate_frame(const FrameSweepConfig& cfg, std::size_t replicas, std::size_t slots_per_frame,
                            const SelectionPolicy& policy, std::uint64_t frame, const LdpcCode& code,
                            const PredictorBank* bank);

/// Classifier metrics of a model bank on a dataset, as a result table.
ResultTable classifier_table(const ClassifierMetrics& metrics, std::size_t degree, double tau);

}  // namespace plnc
