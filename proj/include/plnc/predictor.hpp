#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "plnc/dataset.hpp"

namespace plnc {

/// Success probabilities for weight vectors a(1) .. a(2^d - 1).
using PredictionVector = std::vector<double>;

struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;
};

/// Feed-forward network d -> hidden... -> 2^d - 1 with ReLU hidden units and
/// logistic outputs.
class MlpModel {
 public:
  static constexpr std::size_t kDefaultHidden = 50;

  MlpModel() = default;
  /// All parameters zero.
  explicit MlpModel(std::size_t degree, const std::vector<std::size_t>& hidden = {50, 50, 50});
  /// Weights i.i.d. N(0, weight_variance), biases zero.
  static MlpModel random(std::size_t degree, Rng& rng, double weight_variance = 0.05,
                         const std::vector<std::size_t>& hidden = {50, 50, 50});
  /// Rebuilds a model from explicit layers, validating the shape chain.
  static MlpModel from_layers(std::size_t degree, std::vector<DenseLayer> layers);

  [[nodiscard]] std::size_t degree() const { return degree_; }
  [[nodiscard]] std::size_t n_outputs() const { return (std::size_t{1} << degree_) - 1; }
  [[nodiscard]] std::vector<std::size_t> layer_sizes() const;
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  [[nodiscard]] std::vector<DenseLayer>& layers() { return layers_; }

  /// Gains must already be in decreasing-|h| order (see magnitude_order).
  [[nodiscard]] PredictionVector forward(std::span<const double> gains) const;
  /// Output-layer pre-activations for a batch stored one sample per column.
  [[nodiscard]] Eigen::MatrixXd logits(const Eigen::MatrixXd& inputs) const;

  friend bool operator==(const MlpModel& a, const MlpModel& b);

 private:
  std::size_t degree_ = 0;
  std::vector<DenseLayer> layers_;
};

/// Indices of `gains` sorted by decreasing |h|, ties by lower index.
std::vector<std::size_t> magnitude_order(std::span<const double> gains);

/// Mean over samples of the binary cross-entropy summed over outputs.
/// Fills `grad` (same shapes as the model layers) when non-null.
double loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels,
                         std::vector<DenseLayer>* grad);

/// Dataset packed as (d x N inputs, (2^d-1) x N labels).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pack(const Dataset& data);
double mean_loss(const MlpModel& model, const Dataset& data);

struct TrainHyperparams {
  std::size_t steps = 100000;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_variance = 0.05;
  std::vector<std::size_t> hidden = {50, 50, 50};
  std::uint64_t seed = 1;
  std::size_t checkpoints = 10;

  void validate() const;
};

struct TrainReport {
  /// Training-set loss before the first step and at each checkpoint.
  std::vector<double> losses;
  /// Same checkpoints on the held-out set, when one was supplied.
  std::vector<double> validation_losses;
};

/// Adam on minibatches drawn with replacement. Deterministic in (data, hyper).
MlpModel train(const Dataset& data, const TrainHyperparams& hyper, TrainReport* report = nullptr,
               const Dataset* validation = nullptr);

/// Largest relative deviation between backpropagated and central-difference
/// (step 1e-5, evaluated in long double) parameter gradients of the
/// single-sample loss. The relative error is |a - f| / max(|a|, |f|, 1e-6).
/// Parameters whose +-step changes the ReLU activation pattern are skipped.
/// `analytic_scale` multiplies the analytic gradient before comparison; it
/// exists to test the checker.
double gradient_check(const MlpModel& model, const TrainingSample& sample, double analytic_scale = 1.0);

/// Text format, shortest round-trip decimals:
///   plnc-mlp v1
///   degree <d>
///   layers <count> <size_0> ... <size_count-1>
///   weights <rows> <cols>   followed by rows lines of cols values
///   bias <rows>             followed by one line of values
///   (one weights/bias pair per layer)
///   end
void write_model(std::ostream& out, const MlpModel& model);
MlpModel read_model(std::istream& in);
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

/// One model per collision degree.
class PredictorBank {
 public:
  void add(MlpModel model);
  [[nodiscard]] bool has(std::size_t degree) const { return models_.contains(degree); }
  /// Throws DimensionError if no model for this degree is loaded.
  [[nodiscard]] const MlpModel& at(std::size_t degree) const;
  [[nodiscard]] std::vector<std::size_t> degrees() const;

  /// Loads every "m<d>.model" present in `dir` for d = 1 .. max_degree.
  static PredictorBank load_dir(const std::string& dir, std::size_t max_degree = kDefaultMaxDegree);
  static std::string file_name(std::size_t degree);

 private:
  std::map<std::size_t, MlpModel> models_;
};

}  // namespace plnc
