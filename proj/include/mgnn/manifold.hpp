#pragma once

// Test manifolds with closed-form Laplace-Beltrami spectra: the circle S^1 in
// R^2 and the flat (Clifford) torus S^1 x S^1 in R^4. Eigenfunctions are
// orthonormal in L^2 of the Riemannian volume measure.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/mnn.hpp"
#include "mgnn/point_cloud.hpp"
#include "mgnn/spectral.hpp"

namespace mgnn {

enum class ManifoldKind { Circle, FlatTorus };

ManifoldKind parse_manifold_kind(std::string_view name);
const char* to_string(ManifoldKind kind);

/// Per-angle factor of a separable eigenfunction.
enum class Trig { One, Cos, Sin };

/// Frequencies and trig factors along each angle; the circle uses only u.
struct Mode {
  int freq_u = 0;
  Trig trig_u = Trig::One;
  int freq_v = 0;
  Trig trig_v = Trig::One;
};

class AnalyticManifold {
 public:
  static AnalyticManifold circle(double radius = 1.0);
  static AnalyticManifold flat_torus(double radius = 1.0);
  static AnalyticManifold of_kind(ManifoldKind kind, double radius = 1.0);

  ManifoldKind kind() const noexcept { return kind_; }
  int intrinsic_dim() const noexcept { return kind_ == ManifoldKind::Circle ? 1 : 2; }
  int ambient_dim() const noexcept { return kind_ == ManifoldKind::Circle ? 2 : 4; }
  double radius() const noexcept { return radius_; }
  /// Total Riemannian volume: 2 pi r or (2 pi r)^2.
  double measure() const noexcept;

  /// Angles (u) or (u, v) in [0, 2 pi) to an ambient point.
  Eigen::VectorXd embed(std::span<const double> angles) const;
  /// Inverse of embed. Throws InvalidArgument if the point is off the
  /// manifold by more than 1e-6.
  Eigen::Vector2d angles_of(std::span<const double> ambient) const;

  /// Eigenfunction of `mode` at the given angles.
  double eigenfunction(const Mode& mode, double u, double v = 0.0) const;
  double eigenvalue(const Mode& mode) const;

 private:
  AnalyticManifold(ManifoldKind kind, double radius);
  ManifoldKind kind_;
  double radius_;
};

struct EigenPair {
  int index = 0;
  double eigenvalue = 0.0;
  Mode mode;
};

/// All eigenpairs with eigenvalue <= lambda_max, ascending. Ties: circle puts
/// cos before sin; torus orders by (k, l) lexicographically, then by the
/// (cos|sin) x (cos|sin) combination.
std::vector<EigenPair> eigenpairs_upto(const AnalyticManifold& manifold, double lambda_max);

/// n points i.i.d. uniform in angle space, mapped through the embedding.
PointCloud sample_points(const AnalyticManifold& manifold, Eigen::Index n, std::uint64_t seed);

class BandlimitedSignal {
 public:
  BandlimitedSignal(AnalyticManifold manifold, std::vector<EigenPair> basis, Eigen::VectorXd coefficients,
                    double bandwidth);

  const AnalyticManifold& manifold() const noexcept { return manifold_; }
  double bandwidth() const noexcept { return bandwidth_; }
  /// Number of eigenpairs with eigenvalue <= bandwidth.
  int band_count() const noexcept { return static_cast<int>(basis_.size()); }
  const std::vector<EigenPair>& basis() const noexcept { return basis_; }
  /// Aligned with basis().
  const Eigen::VectorXd& coefficients() const noexcept { return coeffs_; }
  double coefficient(int index) const;

 private:
  AnalyticManifold manifold_;
  std::vector<EigenPair> basis_;
  Eigen::VectorXd coeffs_;
  double bandwidth_;
};

/// Throws InvalidArgument if a coefficient index lies beyond the bandwidth.
BandlimitedSignal synth_bandlimited(const AnalyticManifold& manifold, const std::map<int, double>& coefficients,
                                    double bandwidth);

/// f(x) = sum_i fhat_i phi_i(x) at each row of `points`.
Eigen::VectorXd eval_signal(const BandlimitedSignal& signal, const Eigen::MatrixXd& points);

/// Periodic trapezoidal rule on a regular angle grid.
struct QuadratureGrid {
  AnalyticManifold manifold = AnalyticManifold::circle();
  /// G x d angles.
  Eigen::MatrixXd angles;
  /// G x N ambient points.
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const noexcept { return weights.size(); }
};

/// nodes_per_dim^d nodes; defaults are 4096 for the circle and 256 for the torus.
QuadratureGrid make_grid(const AnalyticManifold& manifold, int nodes_per_dim = 0);

/// rows = nodes, cols = basis functions.
Eigen::MatrixXd basis_matrix(const AnalyticManifold& manifold, std::span<const EigenPair> basis,
                             const Eigen::MatrixXd& angles);

/// Quadrature approximation of <f, phi_i> for each i, keyed by eigenpair index.
std::map<int, double> project_to_spectrum(const Eigen::VectorXd& values_on_grid, const QuadratureGrid& grid,
                                          std::span<const EigenPair> basis);

/// ghat_i = hhat(lambda_i) fhat_i.
BandlimitedSignal continuous_filter_apply(const BandlimitedSignal& signal, const FirFilter& filter);

/// Spectral state of one layer of the continuous network, over the reference
/// basis (eigenvalues <= lambda_ref).
struct ContinuousLayer {
  /// Coefficients of each input feature f_{l-1}^q. Exact for the first layer,
  /// quadrature re-projections afterwards.
  std::vector<Eigen::VectorXd> input_coefficients;
  /// Coefficients of each pre-activation y_l^p = sum_q h^{pq}(L) f_{l-1}^q.
  std::vector<Eigen::VectorXd> pre_activation_coefficients;
};

struct ContinuousMnnResult {
  AnalyticManifold manifold = AnalyticManifold::circle();
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
  std::vector<EigenPair> reference_basis;
  std::vector<ContinuousLayer> layers;
  /// G x F_L final-layer values on the quadrature grid.
  Eigen::MatrixXd grid_values;

  /// Final-layer output sigma(y_L(x)) at arbitrary points (rows), n x F_L.
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& points) const;
  /// Input features of layer `layer` (0-based) at arbitrary points: the signal
  /// itself for layer 0, sigma(y_{layer-1}(x)) afterwards. n x F_{layer}.
  Eigen::MatrixXd layer_input_at(std::size_t layer, const Eigen::MatrixXd& points) const;
  /// h(L) f^q for the q-th input of layer `layer`, evaluated at points.
  Eigen::VectorXd filtered_input_at(std::size_t layer, int q, const FirFilter& filter,
                                    const Eigen::MatrixXd& points) const;
};

/// Quadrature-grid oracle for the continuous network Phi(H, L, f): each filter
/// acts spectrally on coefficients truncated at lambda_ref, the nonlinearity
/// acts on grid values, which are re-projected for the next layer.
/// Throws InvalidArgument if lambda_ref < signal bandwidth.
ContinuousMnnResult continuous_mnn_forward(const MnnModel& model, const BandlimitedSignal& signal,
                                           const QuadratureGrid& grid, double lambda_ref = 100.0);

}  // namespace mgnn
