#pragma once

// Discretized manifold neural network: banks of FIR filters in the heat shift
// E = e^{-L}, pointwise nonlinearity, mean pooling and a linear readout, with
// exact reverse-mode gradients and ADAM training.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/kernels.hpp"
#include "mgnn/spectral.hpp"

namespace mgnn {

enum class Nonlinearity { ReLU, Identity };

const char* to_string(Nonlinearity sigma);
Nonlinearity parse_nonlinearity(std::string_view name);

/// Unit heat shift E = e^{-L} of one graph, precomputed from its spectrum.
class ShiftOperator {
 public:
  explicit ShiftOperator(const Spectrum& spec);
  /// Wraps an already computed symmetric shift matrix.
  explicit ShiftOperator(Eigen::MatrixXd shift);

  const Eigen::MatrixXd& matrix() const noexcept { return e_; }
  Eigen::Index size() const noexcept { return e_.rows(); }

 private:
  Eigen::MatrixXd e_;
};

/// sum_k h_k E^k x, with s_0 = x and s_{k+1} = E s_k.
Eigen::MatrixXd fir_apply(const ShiftOperator& shift, const FirFilter& filter, const Eigen::MatrixXd& x);

/// Filters h^{pq} mapping F_in input features to F_out output features, all
/// with the same number of taps K.
class FilterBank {
 public:
  FilterBank(int in_features, int out_features, int num_taps);

  int in_features() const noexcept { return in_; }
  int out_features() const noexcept { return out_; }
  int num_taps() const noexcept { return static_cast<int>(taps_.size()); }

  double& tap(int p, int q, int k) { return taps_[k](p, q); }
  double tap(int p, int q, int k) const { return taps_[k](p, q); }

  /// F_out x F_in matrix of the k-th taps.
  const Eigen::MatrixXd& tap_matrix(int k) const { return taps_[k]; }
  Eigen::MatrixXd& tap_matrix(int k) { return taps_[k]; }

  FirFilter filter(int p, int q) const;
  void set_filter(int p, int q, const FirFilter& filter);

 private:
  int in_;
  int out_;
  std::vector<Eigen::MatrixXd> taps_;
};

struct Readout {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct MnnModel {
  std::vector<FilterBank> layers;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
  Readout readout;

  /// widths = (F_0, F_1, ..., F_L). Taps are i.i.d. uniform in
  /// [-1/(F_{l-1} K), 1/(F_{l-1} K)], readout weights uniform in [-1/F_L, 1/F_L],
  /// bias zero.
  static MnnModel create(std::span<const int> widths, int num_taps, Nonlinearity sigma,
                         std::uint64_t seed);

  std::vector<int> widths() const;
  int num_taps() const;
  int input_features() const;
  int output_features() const;

  /// Sum_l F_l F_{l-1} K + F_L + 1.
  std::size_t parameter_count() const;

  /// Flattened as layer-major (p, q, k) taps, then readout weights, then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  /// Hash of widths, nonlinearity and parameters.
  std::uint64_t fingerprint() const;

  void validate() const;
};

struct LayerTape {
  /// diffused[k] = E^k X, n x F_in.
  std::vector<Eigen::MatrixXd> diffused;
  Eigen::MatrixXd pre_activation;
  Eigen::MatrixXd output;
};

struct ForwardTape {
  std::vector<LayerTape> layers;
  Eigen::VectorXd pooled;
  double logit = 0.0;
  Eigen::Index nodes = 0;
  std::uint64_t model_fingerprint = 0;
};

struct LayerResult {
  Eigen::MatrixXd output;
  LayerTape tape;
};

LayerResult layer_forward(const FilterBank& bank, const ShiftOperator& shift, const Eigen::MatrixXd& x,
                          Nonlinearity sigma);

struct ForwardResult {
  double logit = 0.0;
  ForwardTape tape;
};

ForwardResult mnn_forward(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x0);

/// Final-layer node features without pooling or readout.
Eigen::MatrixXd mnn_features(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x0);

/// Binary cross-entropy with logistic link, in log-sum-exp form.
double loss_bce(double logit, int label);
/// d loss_bce / d logit = sigmoid(logit) - label.
double loss_bce_grad(double logit, int label);

struct Gradients {
  /// taps[l][k] has the shape of layer l's tap_matrix(k).
  std::vector<std::vector<Eigen::MatrixXd>> taps;
  Eigen::VectorXd readout_weights;
  double readout_bias = 0.0;

  /// Same ordering as MnnModel::parameters().
  std::vector<double> flatten() const;
};

/// Gradients of the loss given d loss / d logit.
Gradients mnn_backward_logit(const MnnModel& model, const ShiftOperator& shift, const ForwardTape& tape,
                             double dlogit);

/// Gradients of loss_bce(logit, label). Throws InvalidArgument if the tape was
/// produced by different parameters or a different graph size.
Gradients mnn_backward(const MnnModel& model, const ShiftOperator& shift, const ForwardTape& tape,
                       int label);

struct TrainConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 10;
  int epochs = 40;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

/// One bias-corrected ADAM update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config);

struct Sample {
  std::shared_ptr<const ShiftOperator> shift;
  Eigen::MatrixXd features;
  int label = 0;
};

struct TrainResult {
  MnnModel model;
  /// Mean training loss per epoch, accumulated during the epoch's passes.
  std::vector<double> loss_history;
};

using EpochCallback = std::function<void(int epoch, const MnnModel& model, double train_loss)>;

/// Mini-batch ADAM on mean per-sample gradients. Shuffling is seeded by
/// config.seed; per-sample passes run in parallel and are reduced in a fixed
/// order, so results do not depend on the thread count.
TrainResult train(MnnModel model, std::span<const Sample> data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {}, kernels::Exec exec = kernels::Exec::Parallel);

double predict_logit(const MnnModel& model, const Sample& sample);

/// Fraction of samples where (logit > 0) disagrees with the label.
double error_rate(const MnnModel& model, std::span<const Sample> data,
                  kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace mgnn
