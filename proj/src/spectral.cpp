#include "mgnn/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "mgnn/errors.hpp"

namespace mgnn {

FirFilter::FirFilter(std::vector<double> taps) : taps_(std::move(taps)) {
  if (taps_.empty()) throw InvalidArgument("FIR filter needs at least one tap");
  for (double h : taps_) {
    if (!std::isfinite(h)) throw InvalidArgument("FIR filter tap is not finite");
  }
}

Spectrum eig_sym(const Eigen::MatrixXd& l) {
  if (l.rows() != l.cols()) throw InvalidArgument("eig_sym: matrix is not square");
  if (l.size() == 0) return {};
  if (!l.allFinite()) throw InvalidArgument("eig_sym: matrix has non-finite entries");
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("eig_sym: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalFailure("eig_sym: eigensolver did not converge");

  Spectrum spec{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < spec.eigenvectors.cols(); ++c) {
    auto v = spec.eigenvectors.col(c);
    for (Eigen::Index r = 0; r < v.size(); ++r) {
      if (std::abs(v(r)) > 1e-12) {
        if (v(r) < 0) v = -v;
        break;
      }
    }
  }
  return spec;
}

namespace {

void check_rows(const Spectrum& spec, const Eigen::MatrixXd& x) {
  if (x.rows() != spec.size()) throw InvalidArgument("signal length does not match the spectrum");
}

Eigen::MatrixXd apply_response(const Spectrum& spec, const Eigen::VectorXd& gain,
                               const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd coeffs = spec.eigenvectors.transpose() * x;
  return spec.eigenvectors * (gain.asDiagonal() * coeffs);
}

}  // namespace

Eigen::MatrixXd heat_apply(const Spectrum& spec, double t, const Eigen::MatrixXd& x) {
  if (!(t >= 0.0)) throw InvalidArgument("heat_apply: t must be nonnegative");
  check_rows(spec, x);
  const Eigen::VectorXd gain = (-t * spec.eigenvalues.array()).exp().matrix();
  return apply_response(spec, gain, x);
}

Eigen::MatrixXd heat_operator(const Spectrum& spec, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("heat_operator: t must be nonnegative");
  const Eigen::VectorXd gain = (-t * spec.eigenvalues.array()).exp().matrix();
  Eigen::MatrixXd e = spec.eigenvectors * gain.asDiagonal() * spec.eigenvectors.transpose();
  // Symmetrize away rounding so E^T == E bit-for-bit.
  return 0.5 * (e + e.transpose());
}

Eigen::MatrixXd spectral_filter_apply(const Spectrum& spec, const FirFilter& filter,
                                      const Eigen::MatrixXd& x) {
  check_rows(spec, x);
  Eigen::VectorXd gain(spec.size());
  for (Eigen::Index i = 0; i < spec.size(); ++i) gain(i) = frequency_response(filter, spec.eigenvalues(i));
  return apply_response(spec, gain, x);
}

double frequency_response(std::span<const double> taps, double lambda) {
  if (taps.empty()) return 0.0;
  // k = 0 separately: 0 * inf would poison the lambda -> inf limit.
  double acc = taps[0];
  for (std::size_t k = 1; k < taps.size(); ++k) {
    acc += taps[k] * std::exp(-static_cast<double>(k) * lambda);
  }
  return acc;
}

double frequency_response(const FirFilter& filter, double lambda) {
  return frequency_response(filter.taps(), lambda);
}

double frequency_response_derivative(std::span<const double> taps, double lambda) {
  double acc = 0.0;
  for (std::size_t k = 1; k < taps.size(); ++k) {
    const double kk = static_cast<double>(k);
    acc -= kk * taps[k] * std::exp(-kk * lambda);
  }
  return acc;
}

namespace {

template <class F>
double grid_max(Interval range, std::size_t grid_points, F&& f) {
  if (!(range.hi >= range.lo)) throw InvalidArgument("interval must satisfy lo <= hi");
  const std::size_t m = std::max<std::size_t>(grid_points, 2);
  double best = 0.0;
  for (std::size_t g = 0; g < m; ++g) {
    const double lambda =
        range.lo + (range.hi - range.lo) * static_cast<double>(g) / static_cast<double>(m - 1);
    best = std::max(best, f(lambda));
  }
  return best;
}

}  // namespace

double lipschitz_estimate(const FirFilter& filter, Interval range, std::size_t grid_points) {
  return grid_max(range, grid_points, [&](double lambda) {
    return std::abs(frequency_response_derivative(filter.taps(), lambda));
  });
}

AmplitudeReport non_amplifying_check(const FirFilter& filter, Interval range, std::size_t grid_points) {
  const double peak = grid_max(range, grid_points,
                               [&](double lambda) { return std::abs(frequency_response(filter, lambda)); });
  return {peak <= 1.0, peak};
}

}  // namespace mgnn
