#include "mgnn/graph.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "mgnn/errors.hpp"

namespace mgnn {

double KernelScale::resolve(Eigen::Index n, int intrinsic_dim) const {
  double t = value_;
  if (mode_ == Mode::AutoRate) {
    if (!(value_ > 0.0)) throw InvalidArgument("auto-rate alpha must be positive");
    if (intrinsic_dim < 1) throw InvalidArgument("auto-rate needs a positive intrinsic dimension");
    t = std::pow(static_cast<double>(n), -1.0 / (intrinsic_dim + 2.0 + value_));
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("kernel scale t must be positive");
  return t;
}

namespace {

double kernel_prefactor(Eigen::Index n, double t, int intrinsic_dim, double measure) {
  return measure / static_cast<double>(n) / (t * std::pow(4.0 * std::numbers::pi * t, intrinsic_dim / 2.0));
}

}  // namespace

double edge_weight(double sq_dist, Eigen::Index n, double t, int intrinsic_dim, double measure) {
  return kernel_prefactor(n, t, intrinsic_dim, measure) * std::exp(-sq_dist / (4.0 * t));
}

GeometricGraph build_graph(const PointCloud& cloud, const KernelScale& scale, const GraphOptions& options) {
  cloud.validate();
  if (!(options.measure > 0.0) || !std::isfinite(options.measure)) {
    throw InvalidArgument("graph measure factor must be positive");
  }
  if (cloud.intrinsic_dim < 1) throw InvalidArgument("point cloud intrinsic dimension must be positive");
  GeometricGraph g;
  g.cloud = cloud;
  g.t = scale.resolve(cloud.size(), cloud.intrinsic_dim);
  const double prefactor = kernel_prefactor(cloud.size(), g.t, cloud.intrinsic_dim, options.measure);
  g.adjacency = kernels::gaussian_adjacency(cloud.points, prefactor, g.t, options.exec);
  g.laplacian = kernels::laplacian_from_adjacency(g.adjacency);
  return g;
}

GraphSignal sample_signal(const BandlimitedSignal& signal, const PointCloud& cloud) {
  return eval_signal(signal, cloud.points);
}

double graph_inner_product(const GraphSignal& u, const GraphSignal& v) {
  if (u.size() != v.size()) throw InvalidArgument("graph signals differ in length");
  if (u.size() == 0) throw InvalidArgument("graph signals are empty");
  return u.dot(v) / static_cast<double>(u.size());
}

double graph_norm(const GraphSignal& u) { return std::sqrt(graph_inner_product(u, u)); }

double graph_features_norm(const GraphFeatures& u) {
  if (u.rows() == 0) throw InvalidArgument("graph signals are empty");
  return std::sqrt(u.squaredNorm() / static_cast<double>(u.rows()));
}

void write_eigenvalues_csv(std::ostream& out, const Spectrum& spec) {
  out << "index,eigenvalue\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < spec.size(); ++i) out << i << ',' << spec.eigenvalues(i) << '\n';
}

void write_adjacency_csv(std::ostream& out, const GeometricGraph& graph) {
  out << "row,col,weight\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < graph.size(); ++i)
    for (Eigen::Index j = 0; j < graph.size(); ++j)
      if (i != j) out << i << ',' << j << ',' << graph.adjacency(i, j) << '\n';
}

}  // namespace mgnn
