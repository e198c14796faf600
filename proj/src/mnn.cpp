#include "mgnn/mnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <string>

#include "mgnn/errors.hpp"

namespace mgnn {

const char* to_string(Nonlinearity sigma) {
  return sigma == Nonlinearity::ReLU ? "relu" : "identity";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "relu") return Nonlinearity::ReLU;
  if (name == "identity" || name == "linear") return Nonlinearity::Identity;
  throw InvalidArgument("unknown nonlinearity: " + std::string(name));
}

ShiftOperator::ShiftOperator(const Spectrum& spec) : e_(heat_operator(spec, 1.0)) {}

ShiftOperator::ShiftOperator(Eigen::MatrixXd shift) : e_(std::move(shift)) {
  if (e_.rows() != e_.cols()) throw InvalidArgument("shift operator must be square");
}

Eigen::MatrixXd fir_apply(const ShiftOperator& shift, const FirFilter& filter, const Eigen::MatrixXd& x) {
  if (x.rows() != shift.size()) throw InvalidArgument("fir_apply: signal length does not match the graph");
  Eigen::MatrixXd s = x;
  Eigen::MatrixXd z = filter[0] * s;
  for (std::size_t k = 1; k < filter.size(); ++k) {
    s = shift.matrix() * s;
    z += filter[k] * s;
  }
  return z;
}

// ---------------------------------------------------------------------------

FilterBank::FilterBank(int in_features, int out_features, int num_taps)
    : in_(in_features), out_(out_features) {
  if (in_features < 1 || out_features < 1 || num_taps < 1) {
    throw InvalidArgument("filter bank dimensions must be positive");
  }
  taps_.assign(static_cast<std::size_t>(num_taps), Eigen::MatrixXd::Zero(out_features, in_features));
}

FirFilter FilterBank::filter(int p, int q) const {
  std::vector<double> h(taps_.size());
  for (std::size_t k = 0; k < taps_.size(); ++k) h[k] = taps_[k](p, q);
  return FirFilter(std::move(h));
}

void FilterBank::set_filter(int p, int q, const FirFilter& filter) {
  if (filter.size() != taps_.size()) throw InvalidArgument("filter length does not match the bank");
  for (std::size_t k = 0; k < taps_.size(); ++k) taps_[k](p, q) = filter[k];
}

// ---------------------------------------------------------------------------

MnnModel MnnModel::create(std::span<const int> widths, int num_taps, Nonlinearity sigma, std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidArgument("model needs at least input and one layer width");
  if (num_taps < 1) throw InvalidArgument("model needs at least one tap");
  std::mt19937_64 rng(seed);
  MnnModel model;
  model.nonlinearity = sigma;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    FilterBank bank(widths[l - 1], widths[l], num_taps);
    const double bound = 1.0 / (static_cast<double>(widths[l - 1]) * num_taps);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int p = 0; p < widths[l]; ++p)
      for (int q = 0; q < widths[l - 1]; ++q)
        for (int k = 0; k < num_taps; ++k) bank.tap(p, q, k) = dist(rng);
    model.layers.push_back(std::move(bank));
  }
  const int out = widths.back();
  std::uniform_real_distribution<double> dist(-1.0 / out, 1.0 / out);
  model.readout.weights.resize(out);
  for (int p = 0; p < out; ++p) model.readout.weights(p) = dist(rng);
  model.readout.bias = 0.0;
  return model;
}

std::vector<int> MnnModel::widths() const {
  std::vector<int> w;
  if (layers.empty()) return w;
  w.push_back(layers.front().in_features());
  for (const auto& bank : layers) w.push_back(bank.out_features());
  return w;
}

int MnnModel::num_taps() const { return layers.empty() ? 0 : layers.front().num_taps(); }
int MnnModel::input_features() const { return layers.empty() ? 0 : layers.front().in_features(); }
int MnnModel::output_features() const { return layers.empty() ? 0 : layers.back().out_features(); }

std::size_t MnnModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& bank : layers) {
    count += static_cast<std::size_t>(bank.in_features()) * bank.out_features() * bank.num_taps();
  }
  return count + static_cast<std::size_t>(readout.weights.size()) + 1;
}

std::vector<double> MnnModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& bank : layers)
    for (int p = 0; p < bank.out_features(); ++p)
      for (int q = 0; q < bank.in_features(); ++q)
        for (int k = 0; k < bank.num_taps(); ++k) out.push_back(bank.tap(p, q, k));
  for (Eigen::Index p = 0; p < readout.weights.size(); ++p) out.push_back(readout.weights(p));
  out.push_back(readout.bias);
  return out;
}

void MnnModel::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw InvalidArgument("parameter vector has the wrong length");
  std::size_t i = 0;
  for (auto& bank : layers)
    for (int p = 0; p < bank.out_features(); ++p)
      for (int q = 0; q < bank.in_features(); ++q)
        for (int k = 0; k < bank.num_taps(); ++k) bank.tap(p, q, k) = params[i++];
  for (Eigen::Index p = 0; p < readout.weights.size(); ++p) readout.weights(p) = params[i++];
  readout.bias = params[i];
}

std::uint64_t MnnModel::fingerprint() const {
  // FNV-1a over widths, nonlinearity and raw parameter bytes.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (int w : widths()) mix(&w, sizeof w);
  const int k = num_taps();
  mix(&k, sizeof k);
  const int s = static_cast<int>(nonlinearity);
  mix(&s, sizeof s);
  const auto params = parameters();
  mix(params.data(), params.size() * sizeof(double));
  return h;
}

void MnnModel::validate() const {
  if (layers.empty()) throw InvalidArgument("model has no layers");
  const int k = layers.front().num_taps();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].num_taps() != k) throw InvalidArgument("layers disagree on the number of taps");
    if (l > 0 && layers[l].in_features() != layers[l - 1].out_features()) {
      throw InvalidArgument("adjacent layer widths do not match");
    }
  }
  if (readout.weights.size() != layers.back().out_features()) {
    throw InvalidArgument("readout width does not match the last layer");
  }
  for (double p : parameters()) {
    if (!std::isfinite(p)) throw InvalidArgument("model has non-finite parameters");
  }
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& y, Nonlinearity sigma) {
  if (sigma == Nonlinearity::Identity) return y;
  return y.cwiseMax(0.0);
}

}  // namespace

LayerResult layer_forward(const FilterBank& bank, const ShiftOperator& shift, const Eigen::MatrixXd& x,
                          Nonlinearity sigma) {
  if (x.cols() != bank.in_features()) throw InvalidArgument("layer input width does not match the bank");
  if (x.rows() != shift.size()) throw InvalidArgument("layer input length does not match the graph");
  LayerResult result;
  auto& tape = result.tape;
  const int taps = bank.num_taps();
  tape.diffused.reserve(static_cast<std::size_t>(taps));
  tape.diffused.push_back(x);
  for (int k = 1; k < taps; ++k) tape.diffused.push_back(shift.matrix() * tape.diffused.back());

  tape.pre_activation = tape.diffused[0] * bank.tap_matrix(0).transpose();
  for (int k = 1; k < taps; ++k) tape.pre_activation.noalias() += tape.diffused[k] * bank.tap_matrix(k).transpose();
  tape.output = activate(tape.pre_activation, sigma);
  result.output = tape.output;
  return result;
}

ForwardResult mnn_forward(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x0) {
  if (model.layers.empty()) throw InvalidArgument("model has no layers");
  if (x0.cols() != model.input_features()) throw InvalidArgument("input feature count does not match the model");
  ForwardResult result;
  auto& tape = result.tape;
  tape.nodes = x0.rows();
  tape.model_fingerprint = model.fingerprint();
  tape.layers.reserve(model.layers.size());
  const Eigen::MatrixXd* current = &x0;
  for (const auto& bank : model.layers) {
    tape.layers.push_back(layer_forward(bank, shift, *current, model.nonlinearity).tape);
    current = &tape.layers.back().output;
  }
  if (model.readout.weights.size() != current->cols()) {
    throw InvalidArgument("readout width does not match the last layer");
  }
  tape.pooled = current->colwise().mean().transpose();
  tape.logit = model.readout.weights.dot(tape.pooled) + model.readout.bias;
  result.logit = tape.logit;
  return result;
}

Eigen::MatrixXd mnn_features(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x0) {
  if (x0.cols() != model.input_features()) throw InvalidArgument("input feature count does not match the model");
  Eigen::MatrixXd x = x0;
  for (const auto& bank : model.layers) x = layer_forward(bank, shift, x, model.nonlinearity).output;
  return x;
}

double loss_bce(double logit, int label) {
  if (label != 0 && label != 1) throw InvalidArgument("label must be 0 or 1");
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double loss_bce_grad(double logit, int label) {
  if (label != 0 && label != 1) throw InvalidArgument("label must be 0 or 1");
  const double s = logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
  return s - label;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> out;
  for (const auto& layer : taps) {
    const auto rows = layer.front().rows();
    const auto cols = layer.front().cols();
    for (Eigen::Index p = 0; p < rows; ++p)
      for (Eigen::Index q = 0; q < cols; ++q)
        for (const auto& hk : layer) out.push_back(hk(p, q));
  }
  for (Eigen::Index p = 0; p < readout_weights.size(); ++p) out.push_back(readout_weights(p));
  out.push_back(readout_bias);
  return out;
}

Gradients mnn_backward_logit(const MnnModel& model, const ShiftOperator& shift, const ForwardTape& tape,
                             double dlogit) {
  if (tape.model_fingerprint != model.fingerprint() || tape.layers.size() != model.layers.size()) {
    throw InvalidArgument("stale tape: produced by different model parameters");
  }
  if (tape.nodes != shift.size()) throw InvalidArgument("stale tape: produced on a different graph");

  const auto n = static_cast<double>(tape.nodes);
  Gradients g;
  g.readout_bias = dlogit;
  g.readout_weights = dlogit * tape.pooled;
  g.taps.resize(model.layers.size());

  // d loss / d (final features): every node receives dpooled / n.
  const Eigen::RowVectorXd dpooled = (dlogit * model.readout.weights).transpose();
  Eigen::MatrixXd upstream = (dpooled / n).replicate(tape.nodes, 1);

  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& bank = model.layers[li];
    const auto& lt = tape.layers[li];
    Eigen::MatrixXd dy = upstream;
    if (model.nonlinearity == Nonlinearity::ReLU) {
      dy = (lt.pre_activation.array() > 0.0).select(upstream.array(), 0.0).matrix();
    }
    const int taps = bank.num_taps();
    auto& gl = g.taps[li];
    gl.resize(static_cast<std::size_t>(taps));
    for (int k = 0; k < taps; ++k) gl[k] = dy.transpose() * lt.diffused[k];
    if (li == 0) break;
    // dX = sum_k E^k dY H_k, evaluated by Horner's rule (E is symmetric).
    Eigen::MatrixXd dx = dy * bank.tap_matrix(taps - 1);
    for (int k = taps - 2; k >= 0; --k) {
      dx = shift.matrix() * dx;
      dx.noalias() += dy * bank.tap_matrix(k);
    }
    upstream = std::move(dx);
  }
  return g;
}

Gradients mnn_backward(const MnnModel& model, const ShiftOperator& shift, const ForwardTape& tape, int label) {
  return mnn_backward_logit(model, shift, tape, loss_bce_grad(tape.logit, label));
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be nonnegative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("ADAM betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("ADAM epsilon must be positive");
  if (batch_size < 1) throw InvalidArgument("batch size must be positive");
  if (epochs < 0) throw InvalidArgument("epoch count must be nonnegative");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("ADAM state, parameters and gradients differ in size");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

TrainResult train(MnnModel model, std::span<const Sample> data, const TrainConfig& config,
                  const EpochCallback& on_epoch, kernels::Exec exec) {
  if (data.empty()) throw InvalidArgument("training set is empty");
  config.validate();
  model.validate();

  std::vector<double> params = model.parameters();
  AdamState adam(params.size());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> sample_loss(data.size(), 0.0);
  std::vector<std::vector<double>> sample_grad(static_cast<std::size_t>(config.batch_size));
  TrainResult result;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::size_t batch = stop - start;
      kernels::for_each_index(exec, batch, [&](std::size_t b) {
        const std::size_t idx = order[start + b];
        const Sample& s = data[idx];
        const auto fwd = mnn_forward(model, *s.shift, s.features);
        sample_loss[idx] = loss_bce(fwd.logit, s.label);
        sample_grad[b] = mnn_backward(model, *s.shift, fwd.tape, s.label).flatten();
      });
      std::vector<double> mean(params.size(), 0.0);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += sample_grad[b][i];
      for (double& m : mean) m /= static_cast<double>(batch);
      adam_step(params, mean, adam, config);
      model.set_parameters(params);
    }
    double total = 0.0;
    for (double l : sample_loss) total += l;
    const double epoch_loss = total / static_cast<double>(data.size());
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, model, epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

double predict_logit(const MnnModel& model, const Sample& sample) {
  return mnn_forward(model, *sample.shift, sample.features).logit;
}

double error_rate(const MnnModel& model, std::span<const Sample> data, kernels::Exec exec) {
  if (data.empty()) return 0.0;
  std::vector<int> wrong(data.size(), 0);
  kernels::for_each_index(exec, data.size(), [&](std::size_t i) {
    const int predicted = predict_logit(model, data[i]) > 0.0 ? 1 : 0;
    wrong[i] = predicted != data[i].label ? 1 : 0;
  });
  return static_cast<double>(std::accumulate(wrong.begin(), wrong.end(), 0)) / static_cast<double>(data.size());
}

}  // namespace mgnn
