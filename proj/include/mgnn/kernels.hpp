#pragma once

// Data-parallel kernels. Every OpenMP kernel has a serial twin that computes
// the same arithmetic in the same order, so results are bit-identical and the
// serial path doubles as the reference in tests and benchmarks.

#include <cstddef>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace mgnn::kernels {

enum class Exec { Serial, Parallel };

/// A_ij = scale * exp(-|x_i - x_j|^2 / (4t)) for i != j, A_ii = 0.
/// Only the upper triangle is evaluated and mirrored, so A is exactly symmetric.
Eigen::MatrixXd gaussian_adjacency_serial(const Eigen::MatrixXd& points, double scale, double t);
Eigen::MatrixXd gaussian_adjacency_parallel(const Eigen::MatrixXd& points, double scale, double t);
Eigen::MatrixXd gaussian_adjacency(const Eigen::MatrixXd& points, double scale, double t, Exec exec);

/// diag(A 1) - A.
Eigen::MatrixXd laplacian_from_adjacency(const Eigen::MatrixXd& adjacency);

/// Calls body(i) for i in [0, count). Parallel runs use dynamic scheduling;
/// body must only write state owned by index i.
template <class Body>
void for_each_index(Exec exec, std::size_t count, Body&& body) {
  if (exec == Exec::Serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

int max_threads();

}  // namespace mgnn::kernels
