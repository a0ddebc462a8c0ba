#include "plnc/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace plnc {

namespace {

constexpr std::string_view kModelMagic = "plnc-mlp";
constexpr std::string_view kModelVersion = "v1";

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Binary cross-entropy on a logit: softplus(z) - s z.
double bce_from_logit(double z, double s) { return std::max(z, 0.0) - s * z + std::log1p(std::exp(-std::fabs(z))); }

std::vector<std::size_t> chain(std::size_t degree, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{degree};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back((std::size_t{1} << degree) - 1);
  return sizes;
}

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::string word(const char* what) {
    std::string w;
    if (!(in_ >> w)) throw FormatError(std::string("model: truncated while reading ") + what);
    return w;
  }
  void expect(std::string_view token) {
    const auto w = word(std::string(token).c_str());
    if (w != token) throw FormatError("model: expected '" + std::string(token) + "', found '" + w + "'");
  }
  std::size_t size(const char* what) {
    const auto w = word(what);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size()) throw FormatError("model: bad integer " + w);
    return v;
  }
  double value() {
    const auto w = word("parameter");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size() || !std::isfinite(v)) {
      throw FormatError("model: bad parameter value " + w);
    }
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

MlpModel::MlpModel(std::size_t degree, const std::vector<std::size_t>& hidden) : degree_(degree) {
  if (degree == 0 || degree > 16) throw DimensionError("MlpModel: degree out of range");
  const auto sizes = chain(degree, hidden);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(sizes[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes[l]);
    layers_.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
  }
}

MlpModel MlpModel::random(std::size_t degree, Rng& rng, double weight_variance, const std::vector<std::size_t>& hidden) {
  MlpModel m(degree, hidden);
  std::normal_distribution<double> normal(0.0, std::sqrt(weight_variance));
  for (auto& layer : m.layers_) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = normal(rng);
    }
  }
  return m;
}

MlpModel MlpModel::from_layers(std::size_t degree, std::vector<DenseLayer> layers) {
  if (degree == 0 || degree > 16) throw DimensionError("MlpModel: degree out of range");
  if (layers.empty()) throw DimensionError("MlpModel: no layers");
  Eigen::Index prev = static_cast<Eigen::Index>(degree);
  for (const auto& l : layers) {
    if (l.weights.cols() != prev || l.bias.size() != l.weights.rows()) {
      throw DimensionError("MlpModel: layer shapes do not chain");
    }
    prev = l.weights.rows();
  }
  if (prev != static_cast<Eigen::Index>((std::size_t{1} << degree) - 1)) {
    throw DimensionError("MlpModel: output width differs from 2^d - 1");
  }
  MlpModel m;
  m.degree_ = degree;
  m.layers_ = std::move(layers);
  return m;
}

std::vector<std::size_t> MlpModel::layer_sizes() const {
  std::vector<std::size_t> sizes{degree_};
  for (const auto& l : layers_) sizes.push_back(static_cast<std::size_t>(l.weights.rows()));
  return sizes;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers_) count += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return count;
}

Eigen::MatrixXd MlpModel::logits(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != static_cast<Eigen::Index>(degree_)) throw DimensionError("MlpModel: input width differs from degree");
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weights * a).colwise() + layers_[l].bias;
    a = (l + 1 < layers_.size()) ? relu(z) : std::move(z);
  }
  return a;
}

PredictionVector MlpModel::forward(std::span<const double> gains) const {
  if (gains.size() != degree_) {
    throw DimensionError("MlpModel::forward: got " + std::to_string(gains.size()) + " gains for a degree-" +
                         std::to_string(degree_) + " model");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(degree_), 1);
  for (std::size_t i = 0; i < degree_; ++i) x(static_cast<Eigen::Index>(i), 0) = gains[i];
  const Eigen::MatrixXd z = logits(x);
  PredictionVector p(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) p[static_cast<std::size_t>(i)] = sigmoid(z(i, 0));
  return p;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.degree_ != b.degree_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
    if (x.weights != y.weights || x.bias != y.bias) return false;
  }
  return true;
}

std::vector<std::size_t> magnitude_order(std::span<const double> gains) {
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::fabs(gains[a]) > std::fabs(gains[b]); });
  return order;
}

double loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels,
                         std::vector<DenseLayer>* grad) {
  const auto& layers = model.layers();
  const Eigen::Index batch = inputs.cols();
  if (labels.cols() != batch || labels.rows() != static_cast<Eigen::Index>(model.n_outputs())) {
    throw DimensionError("loss_and_gradient: label shape mismatch");
  }
  if (batch == 0) throw DimensionError("loss_and_gradient: empty batch");

  // Forward pass keeping every layer's input and pre-activation.
  std::vector<Eigen::MatrixXd> act{inputs};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    pre.push_back((layers[l].weights * act.back()).colwise() + layers[l].bias);
    if (l + 1 < layers.size()) act.push_back(relu(pre.back()));
  }
  const Eigen::MatrixXd& z = pre.back();
  double loss = 0.0;
  Eigen::MatrixXd delta(z.rows(), z.cols());
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      loss += bce_from_logit(z(r, c), labels(r, c));
      delta(r, c) = (sigmoid(z(r, c)) - labels(r, c)) * inv_batch;
    }
  }
  loss *= inv_batch;
  if (grad == nullptr) return loss;

  grad->resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    (*grad)[l].weights = delta * act[l].transpose();
    (*grad)[l].bias = delta.rowwise().sum();
    if (l > 0) {
      // ReLU subgradient at exactly zero is taken as zero.
      delta = (layers[l].weights.transpose() * delta).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pack(const Dataset& data) {
  const auto d = static_cast<Eigen::Index>(data.degree());
  const auto outputs = static_cast<Eigen::Index>(data.n_outputs());
  const auto n = static_cast<Eigen::Index>(data.samples.size());
  Eigen::MatrixXd x(d, n);
  Eigen::MatrixXd s(outputs, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& sample = data.samples[static_cast<std::size_t>(j)];
    if (sample.gains.size() != data.degree() || sample.labels.size() != data.n_outputs()) {
      throw DimensionError("dataset sample " + std::to_string(j) + " does not match the dataset degree");
    }
    for (Eigen::Index i = 0; i < d; ++i) x(i, j) = sample.gains[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < outputs; ++i) s(i, j) = sample.labels.get(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  }
  return {std::move(x), std::move(s)};
}

double mean_loss(const MlpModel& model, const Dataset& data) {
  const auto [x, s] = pack(data);
  return loss_and_gradient(model, x, s, nullptr);
}

void TrainHyperparams::validate() const {
  if (steps < 1) throw std::invalid_argument("training steps must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(init_variance > 0.0)) throw std::invalid_argument("init variance must be positive");
}

MlpModel train(const Dataset& data, const TrainHyperparams& hyper, TrainReport* report, const Dataset* validation) {
  hyper.validate();
  if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
  const auto [x, s] = pack(data);
  const auto n = x.cols();
  Eigen::MatrixXd vx;
  Eigen::MatrixXd vs;
  if (validation != nullptr) {
    if (validation->degree() != data.degree()) throw DimensionError("train: validation degree differs");
    if (validation->samples.empty()) throw std::invalid_argument("train: empty validation set");
    std::tie(vx, vs) = pack(*validation);
  }

  Rng init_rng(mix_seed(hyper.seed, data.degree(), 0, static_cast<std::uint64_t>(StreamRole::kTraining)));
  Rng batch_rng(mix_seed(hyper.seed, data.degree(), 1, static_cast<std::uint64_t>(StreamRole::kTraining)));
  MlpModel model = MlpModel::random(data.degree(), init_rng, hyper.init_variance, hyper.hidden);

  std::vector<DenseLayer> m1;
  std::vector<DenseLayer> m2;
  for (const auto& l : model.layers()) {
    m1.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  m2 = m1;

  const std::size_t marks = std::max<std::size_t>(1, hyper.checkpoints);
  auto checkpoint = [&] {
    if (report == nullptr) return;
    report->losses.push_back(loss_and_gradient(model, x, s, nullptr));
    if (validation != nullptr) report->validation_losses.push_back(loss_and_gradient(model, vx, vs, nullptr));
  };
  if (report != nullptr) *report = {};
  checkpoint();

  const auto batch = static_cast<Eigen::Index>(hyper.batch_size);
  Eigen::MatrixXd bx(x.rows(), batch);
  Eigen::MatrixXd bs(s.rows(), batch);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<DenseLayer> grad;
  double b1t = 1.0;
  double b2t = 1.0;
  for (std::size_t step = 1; step <= hyper.steps; ++step) {
    for (Eigen::Index j = 0; j < batch; ++j) {
      const Eigen::Index src = pick(batch_rng);
      bx.col(j) = x.col(src);
      bs.col(j) = s.col(src);
    }
    loss_and_gradient(model, bx, bs, &grad);
    b1t *= hyper.beta1;
    b2t *= hyper.beta2;
    const double step_size = hyper.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    const double eps_hat = hyper.epsilon * std::sqrt(1.0 - b2t);
    auto adam = [&](auto& param, auto& first, auto& second, const auto& g) {
      first = hyper.beta1 * first + (1.0 - hyper.beta1) * g;
      second = hyper.beta2 * second + (1.0 - hyper.beta2) * g.cwiseAbs2();
      param.array() -= step_size * first.array() / (second.array().sqrt() + eps_hat);
    };
    for (std::size_t l = 0; l < grad.size(); ++l) {
      auto& layer = model.layers()[l];
      adam(layer.weights, m1[l].weights, m2[l].weights, grad[l].weights);
      adam(layer.bias, m1[l].bias, m2[l].bias, grad[l].bias);
    }
    if (step * marks / hyper.steps != (step - 1) * marks / hyper.steps) checkpoint();
  }
  return model;
}

namespace {

using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using ExtVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct ExtLayer {
  ExtMatrix weights;
  ExtVector bias;
};

// Single-sample loss in extended precision, also recording which hidden
// units are active.
long double extended_loss(const std::vector<ExtLayer>& layers, const ExtVector& x, const ExtVector& s,
                          std::vector<bool>& active) {
  active.clear();
  ExtVector a = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    ExtVector z = layers[l].weights * a + layers[l].bias;
    for (Eigen::Index i = 0; i < z.size(); ++i) active.push_back(z(i) > 0.0L);
    a = z.cwiseMax(0.0L);
  }
  const ExtVector z = layers.back().weights * a + layers.back().bias;
  long double loss = 0.0L;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += std::max(z(i), 0.0L) - s(i) * z(i) + std::log1p(std::exp(-std::fabs(z(i))));
  }
  return loss;
}

}  // namespace

double gradient_check(const MlpModel& model, const TrainingSample& sample, double analytic_scale) {
  const auto d = static_cast<Eigen::Index>(model.degree());
  const auto outputs = static_cast<Eigen::Index>(model.n_outputs());
  if (sample.gains.size() != model.degree() || sample.labels.size() != model.n_outputs()) {
    throw DimensionError("gradient_check: sample does not match model degree");
  }
  Eigen::MatrixXd x(d, 1);
  Eigen::MatrixXd s(outputs, 1);
  for (Eigen::Index i = 0; i < d; ++i) x(i, 0) = sample.gains[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i < outputs; ++i) s(i, 0) = sample.labels.get(static_cast<std::size_t>(i)) ? 1.0 : 0.0;

  std::vector<DenseLayer> grad;
  loss_and_gradient(model, x, s, &grad);

  // The difference quotient is taken in extended precision so that its
  // rounding noise stays far below the smallest gradients compared.
  std::vector<ExtLayer> probe;
  for (const auto& layer : model.layers()) probe.push_back({layer.weights.cast<long double>(), layer.bias.cast<long double>()});
  const ExtVector xe = x.col(0).cast<long double>();
  const ExtVector se = s.col(0).cast<long double>();
  std::vector<bool> base_pattern;
  std::vector<bool> up_pattern;
  std::vector<bool> down_pattern;
  extended_loss(probe, xe, se, base_pattern);

  constexpr long double kStep = 1e-5L;
  constexpr double kFloor = 1e-6;
  double worst = 0.0;
  auto compare = [&](long double& param, double analytic) {
    const long double saved = param;
    param = saved + kStep;
    const long double up = extended_loss(probe, xe, se, up_pattern);
    param = saved - kStep;
    const long double down = extended_loss(probe, xe, se, down_pattern);
    param = saved;
    // A step that moves a hidden unit across its kink does not estimate
    // the derivative at this point.
    if (up_pattern != base_pattern || down_pattern != base_pattern) return;
    const double numeric = static_cast<double>((up - down) / (2.0L * kStep));
    const double a = analytic * analytic_scale;
    const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), kFloor});
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < grad.size(); ++l) {
    auto& layer = probe[l];
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) compare(layer.weights(r, c), grad[l].weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) compare(layer.bias(r), grad[l].bias(r));
  }
  return worst;
}

void write_model(std::ostream& out, const MlpModel& model) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "degree " << model.degree() << '\n';
  const auto sizes = model.layer_sizes();
  out << "layers " << sizes.size();
  for (auto sz : sizes) out << ' ' << sz;
  out << '\n';
  for (const auto& l : model.layers()) {
    out << "weights " << l.weights.rows() << ' ' << l.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out << (c ? " " : "") << format_double(l.weights(r, c));
      out << '\n';
    }
    out << "bias " << l.bias.size() << '\n';
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << format_double(l.bias(r));
    out << '\n';
  }
  out << "end\n";
}

MlpModel read_model(std::istream& in) {
  ModelReader rd(in);
  const auto magic = rd.word("header");
  if (magic != kModelMagic) throw FormatError("model: not a model file");
  const auto version = rd.word("version");
  if (version != kModelVersion) throw FormatError("model: unsupported version '" + version + "'");
  rd.expect("degree");
  const auto degree = rd.size("degree");
  rd.expect("layers");
  const auto count = rd.size("layer count");
  if (count < 2 || count > 64) throw FormatError("model: implausible layer count");
  std::vector<std::size_t> sizes(count);
  for (auto& sz : sizes) sz = rd.size("layer size");
  if (sizes.front() != degree || degree == 0 || degree > 16 || sizes.back() != (std::size_t{1} << degree) - 1) {
    throw FormatError("model: layer sizes inconsistent with degree");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < count; ++l) {
    rd.expect("weights");
    const auto rows = rd.size("rows");
    const auto cols = rd.size("cols");
    if (rows != sizes[l + 1] || cols != sizes[l]) throw FormatError("model: weight shape mismatch");
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rd.value();
      }
    }
    rd.expect("bias");
    if (rd.size("bias size") != rows) throw FormatError("model: bias shape mismatch");
    for (std::size_t r = 0; r < rows; ++r) layer.bias(static_cast<Eigen::Index>(r)) = rd.value();
    layers.push_back(std::move(layer));
  }
  rd.expect("end");
  try {
    return MlpModel::from_layers(degree, std::move(layers));
  } catch (const DimensionError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_model(const std::string& path, const MlpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_model(out, model);
  if (!out) throw std::runtime_error("write failed: " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_model(in);
}

void PredictorBank::add(MlpModel model) {
  const auto d = model.degree();
  models_.insert_or_assign(d, std::move(model));
}

const MlpModel& PredictorBank::at(std::size_t degree) const {
  const auto it = models_.find(degree);
  if (it == models_.end()) throw DimensionError("no predictor model for collision degree " + std::to_string(degree));
  return it->second;
}

std::vector<std::size_t> PredictorBank::degrees() const {
  std::vector<std::size_t> out;
  for (const auto& [d, _] : models_) out.push_back(d);
  return out;
}

std::string PredictorBank::file_name(std::size_t degree) { return "m" + std::to_string(degree) + ".model"; }

PredictorBank PredictorBank::load_dir(const std::string& dir, std::size_t max_degree) {
  PredictorBank bank;
  for (std::size_t d = 1; d <= max_degree; ++d) {
    const auto path = std::filesystem::path(dir) / file_name(d);
    if (!std::filesystem::exists(path)) continue;
    auto model = load_model(path.string());
    if (model.degree() != d) {
      throw FormatError(path.string() + " holds a degree-" + std::to_string(model.degree()) + " model");
    }
    bank.add(std::move(model));
  }
  return bank;
}

}  // namespace plnc
