#include "mgnn/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

#include "mgnn/errors.hpp"

namespace mgnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEmbeddingTolerance = 1e-6;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

// Unit-L^2 factor along one angle of a circle with length 2 pi r.
double trig_factor(Trig trig, int freq, double angle, double radius) {
  switch (trig) {
    case Trig::One:
      return 1.0 / std::sqrt(kTwoPi * radius);
    case Trig::Cos:
      return std::cos(freq * angle) / std::sqrt(std::numbers::pi * radius);
    case Trig::Sin:
      return std::sin(freq * angle) / std::sqrt(std::numbers::pi * radius);
  }
  return 0.0;
}

std::vector<Trig> trig_choices(int freq) {
  if (freq == 0) return {Trig::One};
  return {Trig::Cos, Trig::Sin};
}

}  // namespace

ManifoldKind parse_manifold_kind(std::string_view name) {
  if (name == "circle") return ManifoldKind::Circle;
  if (name == "torus" || name == "flat-torus" || name == "flat_torus") return ManifoldKind::FlatTorus;
  throw InvalidArgument("unknown manifold: " + std::string(name));
}

const char* to_string(ManifoldKind kind) { return kind == ManifoldKind::Circle ? "circle" : "torus"; }

AnalyticManifold::AnalyticManifold(ManifoldKind kind, double radius) : kind_(kind), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("manifold radius must be positive");
}

AnalyticManifold AnalyticManifold::circle(double radius) { return {ManifoldKind::Circle, radius}; }
AnalyticManifold AnalyticManifold::flat_torus(double radius) { return {ManifoldKind::FlatTorus, radius}; }
AnalyticManifold AnalyticManifold::of_kind(ManifoldKind kind, double radius) { return {kind, radius}; }

double AnalyticManifold::measure() const noexcept {
  const double circumference = kTwoPi * radius_;
  return kind_ == ManifoldKind::Circle ? circumference : circumference * circumference;
}

Eigen::VectorXd AnalyticManifold::embed(std::span<const double> angles) const {
  if (angles.size() < static_cast<std::size_t>(intrinsic_dim())) throw InvalidArgument("too few angles");
  Eigen::VectorXd x(ambient_dim());
  x(0) = radius_ * std::cos(angles[0]);
  x(1) = radius_ * std::sin(angles[0]);
  if (kind_ == ManifoldKind::FlatTorus) {
    x(2) = radius_ * std::cos(angles[1]);
    x(3) = radius_ * std::sin(angles[1]);
  }
  return x;
}

Eigen::Vector2d AnalyticManifold::angles_of(std::span<const double> ambient) const {
  if (ambient.size() != static_cast<std::size_t>(ambient_dim())) {
    throw InvalidArgument("point has the wrong ambient dimension");
  }
  auto angle = [&](double a, double b) {
    if (std::abs(std::hypot(a, b) - radius_) > kEmbeddingTolerance) {
      throw InvalidArgument("point does not lie on the manifold");
    }
    return wrap_angle(std::atan2(b, a));
  };
  Eigen::Vector2d out(angle(ambient[0], ambient[1]), 0.0);
  if (kind_ == ManifoldKind::FlatTorus) out(1) = angle(ambient[2], ambient[3]);
  return out;
}

double AnalyticManifold::eigenfunction(const Mode& mode, double u, double v) const {
  const double fu = trig_factor(mode.trig_u, mode.freq_u, u, radius_);
  if (kind_ == ManifoldKind::Circle) return fu;
  return fu * trig_factor(mode.trig_v, mode.freq_v, v, radius_);
}

double AnalyticManifold::eigenvalue(const Mode& mode) const {
  const double k2 = static_cast<double>(mode.freq_u) * mode.freq_u;
  const double l2 = kind_ == ManifoldKind::Circle ? 0.0 : static_cast<double>(mode.freq_v) * mode.freq_v;
  return (k2 + l2) / (radius_ * radius_);
}

std::vector<EigenPair> eigenpairs_upto(const AnalyticManifold& manifold, double lambda_max) {
  std::vector<EigenPair> pairs;
  if (!(lambda_max >= 0.0)) return pairs;
  const double r2 = manifold.radius() * manifold.radius();
  const int fmax = static_cast<int>(std::floor(std::sqrt(lambda_max * r2))) + 1;

  if (manifold.kind() == ManifoldKind::Circle) {
    for (int m = 0; m <= fmax; ++m) {
      for (Trig t : trig_choices(m)) {
        Mode mode{m, t, 0, Trig::One};
        const double lambda = manifold.eigenvalue(mode);
        if (lambda <= lambda_max) pairs.push_back({0, lambda, mode});
      }
    }
  } else {
    struct Candidate {
      long long squared;
      int k, l, combo;
      Mode mode;
    };
    std::vector<Candidate> cands;
    for (int k = 0; k <= fmax; ++k) {
      for (int l = 0; l <= fmax; ++l) {
        const long long sq = static_cast<long long>(k) * k + static_cast<long long>(l) * l;
        if (static_cast<double>(sq) / r2 > lambda_max) continue;
        int combo = 0;
        for (Trig tu : trig_choices(k))
          for (Trig tv : trig_choices(l)) cands.push_back({sq, k, l, combo++, Mode{k, tu, l, tv}});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.squared, a.k, a.l, a.combo) < std::tie(b.squared, b.k, b.l, b.combo);
    });
    for (const auto& c : cands) pairs.push_back({0, manifold.eigenvalue(c.mode), c.mode});
  }
  // Circle candidates are generated in ascending order already.
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].index = static_cast<int>(i);
  return pairs;
}

PointCloud sample_points(const AnalyticManifold& manifold, Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("sample_points needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  PointCloud cloud;
  cloud.provenance = Provenance::ManifoldSample;
  cloud.intrinsic_dim = manifold.intrinsic_dim();
  cloud.points.resize(n, manifold.ambient_dim());
  double a[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < manifold.intrinsic_dim(); ++d) a[d] = angle(rng);
    cloud.points.row(i) = manifold.embed(a).transpose();
  }
  return cloud;
}

// ---------------------------------------------------------------------------

BandlimitedSignal::BandlimitedSignal(AnalyticManifold manifold, std::vector<EigenPair> basis,
                                     Eigen::VectorXd coefficients, double bandwidth)
    : manifold_(manifold), basis_(std::move(basis)), coeffs_(std::move(coefficients)), bandwidth_(bandwidth) {
  if (static_cast<std::size_t>(coeffs_.size()) != basis_.size()) {
    throw InvalidArgument("coefficient count does not match the basis");
  }
}

double BandlimitedSignal::coefficient(int index) const {
  if (index < 0 || index >= band_count()) return 0.0;
  return coeffs_(index);
}

BandlimitedSignal synth_bandlimited(const AnalyticManifold& manifold, const std::map<int, double>& coefficients,
                                    double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
  auto basis = eigenpairs_upto(manifold, bandwidth);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& [index, value] : coefficients) {
    if (index < 0) throw InvalidArgument("negative eigenpair index");
    if (index >= static_cast<int>(basis.size())) {
      throw InvalidArgument("coefficient index " + std::to_string(index) + " lies beyond the bandwidth");
    }
    if (!std::isfinite(value)) throw InvalidArgument("coefficient is not finite");
    c(index) = value;
  }
  return {manifold, std::move(basis), std::move(c), bandwidth};
}

namespace {

Eigen::MatrixXd angles_of_points(const AnalyticManifold& manifold, const Eigen::MatrixXd& points) {
  if (points.cols() != manifold.ambient_dim()) throw InvalidArgument("points have the wrong ambient dimension");
  Eigen::MatrixXd angles(points.rows(), manifold.intrinsic_dim());
  std::vector<double> row(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) row[c] = points(i, c);
    const Eigen::Vector2d a = manifold.angles_of(row);
    for (int d = 0; d < manifold.intrinsic_dim(); ++d) angles(i, d) = a(d);
  }
  return angles;
}

double angle_v(const Eigen::MatrixXd& angles, Eigen::Index i) { return angles.cols() > 1 ? angles(i, 1) : 0.0; }

}  // namespace

Eigen::MatrixXd basis_matrix(const AnalyticManifold& manifold, std::span<const EigenPair> basis,
                             const Eigen::MatrixXd& angles) {
  Eigen::MatrixXd phi(angles.rows(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index i = 0; i < angles.rows(); ++i) {
    const double u = angles(i, 0);
    const double v = angle_v(angles, i);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      phi(i, static_cast<Eigen::Index>(j)) = manifold.eigenfunction(basis[j].mode, u, v);
    }
  }
  return phi;
}

Eigen::VectorXd eval_signal(const BandlimitedSignal& signal, const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd angles = angles_of_points(signal.manifold(), points);
  return basis_matrix(signal.manifold(), signal.basis(), angles) * signal.coefficients();
}

QuadratureGrid make_grid(const AnalyticManifold& manifold, int nodes_per_dim) {
  const bool circle = manifold.kind() == ManifoldKind::Circle;
  if (nodes_per_dim <= 0) nodes_per_dim = circle ? 4096 : 256;
  if (nodes_per_dim < 2) throw InvalidArgument("quadrature grid needs at least 2 nodes per dimension");
  const Eigen::Index g = nodes_per_dim;
  const Eigen::Index total = circle ? g : g * g;
  const double h = kTwoPi / static_cast<double>(g);
  QuadratureGrid grid;
  grid.manifold = manifold;
  grid.angles.resize(total, manifold.intrinsic_dim());
  grid.points.resize(total, manifold.ambient_dim());
  // Trapezoid weights: (arc length per node)^d.
  const double w = std::pow(h * manifold.radius(), manifold.intrinsic_dim());
  grid.weights = Eigen::VectorXd::Constant(total, w);
  for (Eigen::Index i = 0; i < total; ++i) {
    double a[2] = {h * static_cast<double>(circle ? i : i / g), circle ? 0.0 : h * static_cast<double>(i % g)};
    grid.angles(i, 0) = a[0];
    if (!circle) grid.angles(i, 1) = a[1];
    grid.points.row(i) = manifold.embed(a).transpose();
  }
  return grid;
}

namespace {

// Row blocks keep the basis matrix small on large torus grids.
constexpr Eigen::Index kBlockRows = 8192;

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& values, const QuadratureGrid& grid,
                                std::span<const EigenPair> basis) {
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()), values.cols());
  for (Eigen::Index start = 0; start < grid.size(); start += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, grid.size() - start);
    const Eigen::MatrixXd phi = basis_matrix(grid.manifold, basis, grid.angles.middleRows(start, rows));
    coeffs.noalias() +=
        phi.transpose() * (grid.weights.segment(start, rows).asDiagonal() * values.middleRows(start, rows));
  }
  return coeffs;
}

Eigen::MatrixXd synthesize_columns(const Eigen::MatrixXd& coeffs, const QuadratureGrid& grid,
                                   std::span<const EigenPair> basis) {
  Eigen::MatrixXd values(grid.size(), coeffs.cols());
  for (Eigen::Index start = 0; start < grid.size(); start += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, grid.size() - start);
    const Eigen::MatrixXd phi = basis_matrix(grid.manifold, basis, grid.angles.middleRows(start, rows));
    values.middleRows(start, rows).noalias() = phi * coeffs;
  }
  return values;
}

Eigen::VectorXd response_vector(std::span<const EigenPair> basis, const FirFilter& filter) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) g(static_cast<Eigen::Index>(i)) = frequency_response(filter, basis[i].eigenvalue);
  return g;
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& y, Nonlinearity sigma) {
  return sigma == Nonlinearity::ReLU ? Eigen::MatrixXd(y.cwiseMax(0.0)) : y;
}

}  // namespace

std::map<int, double> project_to_spectrum(const Eigen::VectorXd& values_on_grid, const QuadratureGrid& grid,
                                          std::span<const EigenPair> basis) {
  if (values_on_grid.size() != grid.size()) throw InvalidArgument("values do not match the grid nodes");
  const Eigen::MatrixXd c = project_columns(values_on_grid, grid, basis);
  std::map<int, double> out;
  for (std::size_t i = 0; i < basis.size(); ++i) out[basis[i].index] = c(static_cast<Eigen::Index>(i), 0);
  return out;
}

BandlimitedSignal continuous_filter_apply(const BandlimitedSignal& signal, const FirFilter& filter) {
  const Eigen::VectorXd gain = response_vector(signal.basis(), filter);
  return {signal.manifold(), signal.basis(), gain.cwiseProduct(signal.coefficients()), signal.bandwidth()};
}

// ---------------------------------------------------------------------------

ContinuousMnnResult continuous_mnn_forward(const MnnModel& model, const BandlimitedSignal& signal,
                                           const QuadratureGrid& grid, double lambda_ref) {
  if (lambda_ref < signal.bandwidth()) throw InvalidArgument("lambda_ref must be at least the signal bandwidth");
  if (grid.manifold.kind() != signal.manifold().kind()) throw InvalidArgument("grid and signal manifolds differ");
  model.validate();
  if (model.input_features() != 1) throw InvalidArgument("continuous oracle takes a single input feature");

  ContinuousMnnResult out;
  out.manifold = signal.manifold();
  out.nonlinearity = model.nonlinearity;
  out.reference_basis = eigenpairs_upto(signal.manifold(), lambda_ref);
  const auto& basis = out.reference_basis;
  const auto modes = static_cast<Eigen::Index>(basis.size());

  // In-band basis is a prefix of the reference basis.
  Eigen::VectorXd f0 = Eigen::VectorXd::Zero(modes);
  f0.head(signal.band_count()) = signal.coefficients();
  std::vector<Eigen::VectorXd> inputs{f0};

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& bank = model.layers[l];
    ContinuousLayer layer;
    layer.input_coefficients = inputs;
    Eigen::MatrixXd pre(modes, bank.out_features());
    for (int p = 0; p < bank.out_features(); ++p) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(modes);
      for (int q = 0; q < bank.in_features(); ++q) {
        y += response_vector(basis, bank.filter(p, q)).cwiseProduct(inputs[static_cast<std::size_t>(q)]);
      }
      pre.col(p) = y;
      layer.pre_activation_coefficients.push_back(std::move(y));
    }
    out.layers.push_back(std::move(layer));

    const Eigen::MatrixXd values = activate(synthesize_columns(pre, grid, basis), model.nonlinearity);
    if (l + 1 == model.layers.size()) {
      out.grid_values = values;
    } else {
      const Eigen::MatrixXd next = project_columns(values, grid, basis);
      inputs.clear();
      for (Eigen::Index p = 0; p < next.cols(); ++p) inputs.emplace_back(next.col(p));
    }
  }
  return out;
}

Eigen::MatrixXd ContinuousMnnResult::evaluate(const Eigen::MatrixXd& points) const {
  return layer_input_at(layers.size(), points);
}

Eigen::MatrixXd ContinuousMnnResult::layer_input_at(std::size_t layer, const Eigen::MatrixXd& points) const {
  if (layer > layers.size()) throw InvalidArgument("layer index out of range");
  const Eigen::MatrixXd phi = basis_matrix(manifold, reference_basis, angles_of_points(manifold, points));
  if (layer == 0) return phi * layers.front().input_coefficients.front();
  const auto& source = layers[layer - 1].pre_activation_coefficients;
  Eigen::MatrixXd y(points.rows(), static_cast<Eigen::Index>(source.size()));
  for (std::size_t p = 0; p < source.size(); ++p) y.col(static_cast<Eigen::Index>(p)) = phi * source[p];
  return activate(y, nonlinearity);
}

Eigen::VectorXd ContinuousMnnResult::filtered_input_at(std::size_t layer, int q, const FirFilter& filter,
                                                       const Eigen::MatrixXd& points) const {
  if (layer >= layers.size()) throw InvalidArgument("layer index out of range");
  const auto& inputs = layers[layer].input_coefficients;
  if (q < 0 || static_cast<std::size_t>(q) >= inputs.size()) throw InvalidArgument("feature index out of range");
  const Eigen::MatrixXd phi = basis_matrix(manifold, reference_basis, angles_of_points(manifold, points));
  return phi * response_vector(reference_basis, filter).cwiseProduct(inputs[static_cast<std::size_t>(q)]);
}

}  // namespace mgnn
