#pragma once

// Complete Gaussian-kernel graph on a point cloud:
//   w_ij = (mu / n) * 1 / (t (4 pi t)^{d/2}) * exp(-|x_i - x_j|^2 / (4t)),
//   L = diag(A 1) - A,
// with d the intrinsic dimension and mu a measure factor (1 by default).
// With points drawn uniformly from a manifold of total volume V, the mu = 1
// Laplacian approximates the Laplace-Beltrami operator divided by V; mu = V
// targets the operator itself.

#include <iosfwd>

#include <Eigen/Dense>

#include "mgnn/kernels.hpp"
#include "mgnn/manifold.hpp"
#include "mgnn/point_cloud.hpp"
#include "mgnn/spectral.hpp"

namespace mgnn {

class KernelScale {
 public:
  enum class Mode { Explicit, AutoRate };

  /// Fixed t.
  static KernelScale fixed(double t) { return {Mode::Explicit, t}; }
  /// t_n = n^{-1/(d + 2 + alpha)}.
  static KernelScale auto_rate(double alpha) { return {Mode::AutoRate, alpha}; }

  Mode mode() const noexcept { return mode_; }
  double value() const noexcept { return value_; }

  /// Throws InvalidArgument unless the resulting t is positive and finite.
  double resolve(Eigen::Index n, int intrinsic_dim) const;

 private:
  KernelScale(Mode mode, double value) : mode_(mode), value_(value) {}
  Mode mode_;
  double value_;
};

struct GraphOptions {
  double measure = 1.0;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct GeometricGraph {
  PointCloud cloud;
  double t = 0.0;
  Eigen::MatrixXd adjacency;
  Eigen::MatrixXd laplacian;

  Eigen::Index size() const noexcept { return adjacency.rows(); }
};

/// Single edge weight for squared distance `sq_dist`.
double edge_weight(double sq_dist, Eigen::Index n, double t, int intrinsic_dim, double measure = 1.0);

GeometricGraph build_graph(const PointCloud& cloud, const KernelScale& scale, const GraphOptions& options = {});

/// [x]_i = f(x_i). Throws InvalidArgument for points off the signal's manifold.
GraphSignal sample_signal(const BandlimitedSignal& signal, const PointCloud& cloud);

/// (1/n) sum_i u_i v_i.
double graph_inner_product(const GraphSignal& u, const GraphSignal& v);
double graph_norm(const GraphSignal& u);
/// sqrt((1/n) sum over nodes and features of u^2).
double graph_features_norm(const GraphFeatures& u);

/// "index,eigenvalue" rows.
void write_eigenvalues_csv(std::ostream& out, const Spectrum& spec);
/// "row,col,weight" triples for every off-diagonal entry.
void write_adjacency_csv(std::ostream& out, const GeometricGraph& graph);

}  // namespace mgnn
