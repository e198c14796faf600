#pragma once

#include <random>

#include <Eigen/Dense>

#include "mgnn/graph.hpp"
#include "mgnn/point_cloud.hpp"

namespace mgnn::testutil {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline PointCloud random_cloud(Eigen::Index n, Eigen::Index dim, std::mt19937_64& rng) {
  PointCloud c;
  c.points = random_matrix(n, dim, rng);
  c.intrinsic_dim = 2;
  c.provenance = Provenance::Synthetic;
  return c;
}

/// Laplacian of a random Gaussian-kernel graph.
inline Eigen::MatrixXd random_laplacian(Eigen::Index n, std::mt19937_64& rng, double t = 0.5) {
  return build_graph(random_cloud(n, 3, rng), KernelScale::fixed(t)).laplacian;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace mgnn::testutil
