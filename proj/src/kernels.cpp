#include "mgnn/kernels.hpp"

#include <cmath>

#include <omp.h>

namespace mgnn::kernels {

namespace {

inline double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double d = points(i, c) - points(j, c);
    acc += d * d;
  }
  return acc;
}

inline void adjacency_row(const Eigen::MatrixXd& points, double scale, double inv4t,
                          Eigen::Index i, Eigen::MatrixXd& a) {
  for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
    const double w = scale * std::exp(-squared_distance(points, i, j) * inv4t);
    a(i, j) = w;
    a(j, i) = w;
  }
}

}  // namespace

Eigen::MatrixXd gaussian_adjacency_serial(const Eigen::MatrixXd& points, double scale, double t) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const double inv4t = 1.0 / (4.0 * t);
  for (Eigen::Index i = 0; i < n; ++i) adjacency_row(points, scale, inv4t, i, a);
  return a;
}

Eigen::MatrixXd gaussian_adjacency_parallel(const Eigen::MatrixXd& points, double scale, double t) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const double inv4t = 1.0 / (4.0 * t);
  // Row i writes (i, j>i) and (j>i, i): disjoint across rows.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) adjacency_row(points, scale, inv4t, i, a);
  return a;
}

Eigen::MatrixXd gaussian_adjacency(const Eigen::MatrixXd& points, double scale, double t, Exec exec) {
  return exec == Exec::Serial ? gaussian_adjacency_serial(points, scale, t)
                              : gaussian_adjacency_parallel(points, scale, t);
}

Eigen::MatrixXd laplacian_from_adjacency(const Eigen::MatrixXd& adjacency) {
  Eigen::MatrixXd l = -adjacency;
  l.diagonal() += adjacency.rowwise().sum();
  return l;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace mgnn::kernels
