#pragma once

#include <Eigen/Dense>

namespace mgnn {

enum class Provenance { ManifoldSample, MeshSample, Synthetic };

/// n points in ambient R^N, one per row.
struct PointCloud {
  Eigen::MatrixXd points;
  Provenance provenance = Provenance::Synthetic;
  /// Intrinsic dimension used by the kernel normalization; surfaces are 2.
  int intrinsic_dim = 2;

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index ambient_dim() const noexcept { return points.cols(); }

  /// Throws InvalidArgument unless n >= 2 and every coordinate is finite.
  void validate() const;
};

/// A scalar signal on the nodes of a graph.
using GraphSignal = Eigen::VectorXd;
/// F signals on the nodes of a graph, one feature per column.
using GraphFeatures = Eigen::MatrixXd;

}  // namespace mgnn
