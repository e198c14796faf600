#pragma once

// Experiment drivers behind the command-line tool: spectral convergence of the
// graph Laplacian on analytic manifolds, convergence of the discretized network
// to its continuous counterpart, point-cloud classification and the
// finite-difference gradient suite.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgnn/manifold.hpp"
#include "mgnn/mnn.hpp"

namespace mgnn {

enum class ExperimentKind { SpectralConvergence, MnnConvergence, Classification, GradCheck };

ExperimentKind parse_experiment_kind(std::string_view name);
const char* to_string(ExperimentKind kind);

struct ModelSpec {
  std::vector<int> widths{1, 4, 1};
  int taps = 5;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SpectralConvergence;
  std::uint64_t master_seed = 0;
  std::filesystem::path out_dir = "out";

  // Analytic-manifold experiments.
  ManifoldKind manifold = ManifoldKind::Circle;
  double radius = 1.0;
  std::vector<int> n_list{100, 200, 400, 800};
  std::vector<int> seeds{0, 1, 2, 3, 4};
  double alpha = 1.0;
  /// Scale edge weights by the manifold volume so the graph Laplacian targets
  /// the Laplace-Beltrami operator itself rather than its volume-normalized form.
  bool volume_measure = true;
  /// Eigenpairs 0..num_eigenvalues are compared.
  int num_eigenvalues = 5;

  // Network convergence.
  ModelSpec model;
  std::uint64_t model_seed = 1;
  /// Coefficients of f keyed by eigenpair index.
  std::map<int, double> signal{{0, 0.5}, {1, 1.0}, {4, 0.7}};
  double lambda_m = 4.0;
  double lambda_ref = 100.0;
  /// 0 picks the manifold default.
  int quadrature_nodes = 0;
  /// Random filters are rescaled so max |hhat| = 1 on [0, this].
  double normalize_range = 50.0;

  // Classification.
  /// "synthetic" or "modelnet".
  std::string dataset = "synthetic";
  std::optional<std::filesystem::path> data_root;
  std::optional<std::filesystem::path> cache_dir;
  int per_category_limit = 0;
  int train_count = 100;
  int test_count = 50;
  int realizations = 3;
  int n_points = 300;
  double kernel_t = 0.3;
  int classifier_taps = 5;
  std::vector<std::string> architectures{"GF1Ly", "GF2Ly", "GNN1Ly", "GNN2Ly"};
  TrainConfig train;

  // Gradient check.
  int grad_cases = 20;
  double fd_step = 1e-5;

  /// Throws InvalidArgument.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
/// Only keys present in `j` are overwritten.
void from_json(const nlohmann::json& j, ExperimentConfig& config);

/// Widths and nonlinearity of the named classification architectures
/// GF1Ly, GF2Ly, GNN1Ly, GNN2Ly.
ModelSpec architecture_spec(const std::string& name, int taps);

/// RNG seed owned by one (n, seed) cell.
std::uint64_t cell_seed(std::uint64_t master, std::uint64_t n, std::uint64_t seed_index);

struct SpectralRecord {
  int n = 0;
  int seed = 0;
  double t = 0.0;
  int index = 0;
  double analytic_eigenvalue = 0.0;
  double graph_eigenvalue = 0.0;
  double eigenvalue_error = 0.0;
  double eigenfunction_error = 0.0;
};

struct SpectralResult {
  std::vector<SpectralRecord> records;
  /// Median eigenvalue error per (n, index).
  std::map<int, std::vector<double>> median_eigenvalue_error;
  std::map<int, std::vector<double>> median_eigenfunction_error;
};

/// Subspace eigenfunction error of one eigenvalue group. `analytic` holds the
/// analytic eigenfunctions at the nodes (columns, unit L2 norm on the
/// manifold), `graph_vectors` the matching orthonormal graph eigenvectors.
/// Returns sqrt(||(I - P) U||^2_{L2(G_n)} / |group|), with U the analytic
/// columns scaled by sqrt(volume) and P the projection onto the graph columns.
double eigenspace_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& graph_vectors, double volume);

SpectralResult run_spectral_convergence(const ExperimentConfig& config);

struct MnnRecord {
  int n = 0;
  int seed = 0;
  double t = 0.0;
  double output_error = 0.0;
  double inner_product_error = 0.0;
  /// d[l] for layers 1..L.
  std::vector<double> layer_discrepancy;
};

struct MnnConvergenceResult {
  std::vector<MnnRecord> records;
  std::map<int, double> median_output_error;
  MnnModel model;
  std::vector<double> lipschitz;
};

/// Random model with taps uniform in [-1, 1], each filter rescaled to be
/// non-amplifying on [0, normalize_range].
MnnModel random_normalized_model(const ModelSpec& spec, std::uint64_t seed, double normalize_range);

/// Uses config.model unless `model` is given.
MnnConvergenceResult run_mnn_convergence(const ExperimentConfig& config,
                                         const std::optional<MnnModel>& model = std::nullopt);

struct CurveRow {
  std::string arch;
  int realization = 0;
  /// 0 is the untrained model.
  int epoch = 0;
  double train_loss = 0.0;
  double test_error = 0.0;
};

struct ArchSummary {
  std::string arch;
  std::vector<double> test_errors;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ClassificationResult {
  std::vector<CurveRow> curve;
  std::vector<ArchSummary> summary;
  int train_size = 0;
  int test_size = 0;
  int files_skipped = 0;

  const ArchSummary& arch(const std::string& name) const;
};

ClassificationResult run_classification(const ExperimentConfig& config);

struct GradCheckCase {
  int index = 0;
  int nodes = 0;
  std::vector<int> widths;
  int taps = 0;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double max_rel_error = 0.0;
};

/// Largest |analytic - central difference| / max(|a|, |b|, 1e-6) over all
/// parameters of loss_bce.
double gradient_check(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x, int label,
                      double step);

GradCheckReport run_grad_check(const ExperimentConfig& config);

// Output files: records.csv, summary.json and meta.json under config.out_dir.
// Every CSV value is checked to be finite.

void write_spectral_outputs(const ExperimentConfig& config, const SpectralResult& result);
void write_mnn_outputs(const ExperimentConfig& config, const MnnConvergenceResult& result);
void write_classification_outputs(const ExperimentConfig& config, const ClassificationResult& result);
void write_grad_check_outputs(const ExperimentConfig& config, const GradCheckReport& report);

/// Resolved config plus build and platform details.
nlohmann::json run_metadata(const ExperimentConfig& config);

double median(std::vector<double> values);

}  // namespace mgnn
