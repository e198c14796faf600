#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/point_cloud.hpp"

namespace mgnn {

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues, orthonormal
/// eigenvector columns. The first component of each eigenvector with magnitude
/// above 1e-12 is positive.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Eigen::Index size() const noexcept { return eigenvalues.size(); }
};

/// Finite impulse response in the heat-shift domain: h(L) = sum_k h_k e^{-kL}.
class FirFilter {
 public:
  FirFilter() : taps_{1.0} {}
  explicit FirFilter(std::vector<double> taps);

  std::span<const double> taps() const noexcept { return taps_; }
  std::size_t size() const noexcept { return taps_.size(); }
  double operator[](std::size_t k) const { return taps_[k]; }

 private:
  std::vector<double> taps_;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Throws InvalidArgument if `l` is asymmetric beyond 1e-10 (scaled by max|l|
/// when that exceeds 1) and NumericalFailure if the solver does not converge.
Spectrum eig_sym(const Eigen::MatrixXd& l);

/// e^{-tL} x through the spectrum. Works column-wise on feature matrices.
Eigen::MatrixXd heat_apply(const Spectrum& spec, double t, const Eigen::MatrixXd& x);

/// Dense e^{-tL}.
Eigen::MatrixXd heat_operator(const Spectrum& spec, double t = 1.0);

/// sum_i hhat(lambda_i) <x, phi_i> phi_i.
Eigen::MatrixXd spectral_filter_apply(const Spectrum& spec, const FirFilter& filter,
                                      const Eigen::MatrixXd& x);

/// hhat(lambda) = sum_k h_k e^{-k lambda}.
double frequency_response(std::span<const double> taps, double lambda);
double frequency_response(const FirFilter& filter, double lambda);

/// d hhat / d lambda = -sum_k k h_k e^{-k lambda}.
double frequency_response_derivative(std::span<const double> taps, double lambda);

/// Maximum of |hhat'| over a uniform grid on the interval. A grid diagnostic,
/// not a certified bound.
double lipschitz_estimate(const FirFilter& filter, Interval range, std::size_t grid_points = 2048);

struct AmplitudeReport {
  bool non_amplifying = true;
  double max_abs_response = 0.0;
};

/// Checks |hhat| <= 1 on a uniform grid and reports max |hhat| for normalization.
AmplitudeReport non_amplifying_check(const FirFilter& filter, Interval range,
                                     std::size_t grid_points = 2048);

}  // namespace mgnn
