#include "mgnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mgnn/dataset.hpp"
#include "mgnn/errors.hpp"
#include "mgnn/graph.hpp"
#include "mgnn/kernels.hpp"
#include "mgnn/mesh.hpp"

namespace mgnn {

using nlohmann::json;

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "spectral-convergence") return ExperimentKind::SpectralConvergence;
  if (name == "mnn-convergence") return ExperimentKind::MnnConvergence;
  if (name == "classify") return ExperimentKind::Classification;
  if (name == "grad-check") return ExperimentKind::GradCheck;
  throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SpectralConvergence: return "spectral-convergence";
    case ExperimentKind::MnnConvergence: return "mnn-convergence";
    case ExperimentKind::Classification: return "classify";
    case ExperimentKind::GradCheck: return "grad-check";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (n_list.empty()) throw InvalidArgument("n list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 2) throw InvalidArgument("every n must be at least 2");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw InvalidArgument("n list must be ascending");
  }
  if (seeds.empty()) throw InvalidArgument("seed list is empty");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (num_eigenvalues < 0) throw InvalidArgument("num_eigenvalues must be nonnegative");
  if (model.widths.size() < 2 || model.taps < 1) throw InvalidArgument("model needs two widths and a tap");
  for (int w : model.widths) {
    if (w < 1) throw InvalidArgument("widths must be positive");
  }
  if (!(lambda_m >= 0.0) || lambda_ref < lambda_m) throw InvalidArgument("need 0 <= lambda_m <= lambda_ref");
  if (quadrature_nodes < 0) throw InvalidArgument("quadrature_nodes must be nonnegative");
  if (!(normalize_range > 0.0)) throw InvalidArgument("normalize_range must be positive");
  if (dataset != "synthetic" && dataset != "modelnet") throw InvalidArgument("dataset must be synthetic or modelnet");
  if (per_category_limit < 0) throw InvalidArgument("per_category_limit must be nonnegative");
  if (train_count < 2 || test_count < 2) throw InvalidArgument("synthetic splits need at least 2 clouds");
  if (realizations < 1) throw InvalidArgument("realizations must be at least 1");
  if (n_points < 2) throw InvalidArgument("n_points must be at least 2");
  if (!(kernel_t > 0.0)) throw InvalidArgument("kernel_t must be positive");
  if (classifier_taps < 1) throw InvalidArgument("classifier_taps must be positive");
  if (architectures.empty()) throw InvalidArgument("no architectures");
  for (const auto& a : architectures) architecture_spec(a, classifier_taps);
  train.validate();
  if (grad_cases < 1) throw InvalidArgument("grad_cases must be positive");
  if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be positive");
}

namespace {

json optional_path(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

template <class T>
void read_key(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

void read_path(const json& j, const char* key, std::optional<std::filesystem::path>& value) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    value.reset();
  } else {
    value = j.at(key).get<std::string>();
  }
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  json signal = json::object();
  for (const auto& [i, v] : c.signal) signal[std::to_string(i)] = v;
  j = json{
      {"kind", to_string(c.kind)},
      {"master_seed", c.master_seed},
      {"out_dir", c.out_dir.string()},
      {"manifold", to_string(c.manifold)},
      {"radius", c.radius},
      {"n_list", c.n_list},
      {"seeds", c.seeds},
      {"alpha", c.alpha},
      {"volume_measure", c.volume_measure},
      {"num_eigenvalues", c.num_eigenvalues},
      {"model",
       {{"widths", c.model.widths}, {"taps", c.model.taps}, {"nonlinearity", to_string(c.model.nonlinearity)}}},
      {"model_seed", c.model_seed},
      {"signal", signal},
      {"lambda_m", c.lambda_m},
      {"lambda_ref", c.lambda_ref},
      {"quadrature_nodes", c.quadrature_nodes},
      {"normalize_range", c.normalize_range},
      {"dataset", c.dataset},
      {"data_root", optional_path(c.data_root)},
      {"cache_dir", optional_path(c.cache_dir)},
      {"per_category_limit", c.per_category_limit},
      {"train_count", c.train_count},
      {"test_count", c.test_count},
      {"realizations", c.realizations},
      {"n_points", c.n_points},
      {"kernel_t", c.kernel_t},
      {"classifier_taps", c.classifier_taps},
      {"architectures", c.architectures},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"seed", c.train.seed}}},
      {"grad_cases", c.grad_cases},
      {"fd_step", c.fd_step},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    if (j.contains("kind")) c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
    read_key(j, "master_seed", c.master_seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("manifold")) c.manifold = parse_manifold_kind(j.at("manifold").get<std::string>());
    read_key(j, "radius", c.radius);
    read_key(j, "n_list", c.n_list);
    read_key(j, "seeds", c.seeds);
    read_key(j, "alpha", c.alpha);
    read_key(j, "volume_measure", c.volume_measure);
    read_key(j, "num_eigenvalues", c.num_eigenvalues);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      read_key(m, "widths", c.model.widths);
      read_key(m, "taps", c.model.taps);
      if (m.contains("nonlinearity")) c.model.nonlinearity = parse_nonlinearity(m.at("nonlinearity").get<std::string>());
    }
    read_key(j, "model_seed", c.model_seed);
    if (j.contains("signal")) {
      c.signal.clear();
      for (const auto& [key, value] : j.at("signal").items()) c.signal[std::stoi(key)] = value.get<double>();
    }
    read_key(j, "lambda_m", c.lambda_m);
    read_key(j, "lambda_ref", c.lambda_ref);
    read_key(j, "quadrature_nodes", c.quadrature_nodes);
    read_key(j, "normalize_range", c.normalize_range);
    read_key(j, "dataset", c.dataset);
    read_path(j, "data_root", c.data_root);
    read_path(j, "cache_dir", c.cache_dir);
    read_key(j, "per_category_limit", c.per_category_limit);
    read_key(j, "train_count", c.train_count);
    read_key(j, "test_count", c.test_count);
    read_key(j, "realizations", c.realizations);
    read_key(j, "n_points", c.n_points);
    read_key(j, "kernel_t", c.kernel_t);
    read_key(j, "classifier_taps", c.classifier_taps);
    read_key(j, "architectures", c.architectures);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      read_key(t, "learning_rate", c.train.learning_rate);
      read_key(t, "beta1", c.train.beta1);
      read_key(t, "beta2", c.train.beta2);
      read_key(t, "epsilon", c.train.epsilon);
      read_key(t, "batch_size", c.train.batch_size);
      read_key(t, "epochs", c.train.epochs);
      read_key(t, "seed", c.train.seed);
    }
    read_key(j, "grad_cases", c.grad_cases);
    read_key(j, "fd_step", c.fd_step);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) throw;
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
}

ModelSpec architecture_spec(const std::string& name, int taps) {
  ModelSpec spec;
  spec.taps = taps;
  if (name == "GF1Ly" || name == "GNN1Ly") {
    spec.widths = {3, 64};
  } else if (name == "GF2Ly" || name == "GNN2Ly") {
    spec.widths = {3, 64, 32};
  } else {
    throw InvalidArgument("unknown architecture '" + name + "'");
  }
  spec.nonlinearity = name.starts_with("GF") ? Nonlinearity::Identity : Nonlinearity::ReLU;
  return spec;
}

std::uint64_t cell_seed(std::uint64_t master, std::uint64_t n, std::uint64_t seed_index) {
  return mix_seed(mix_seed(master, n), seed_index);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

struct Cell {
  int n;
  int seed;
};

std::vector<Cell> make_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (int n : config.n_list)
    for (int s : config.seeds) cells.push_back({n, s});
  return cells;
}

Eigen::MatrixXd point_angles(const AnalyticManifold& manifold, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd angles(points.rows(), manifold.intrinsic_dim());
  std::vector<double> row(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) row[static_cast<std::size_t>(c)] = points(i, c);
    const Eigen::Vector2d a = manifold.angles_of(row);
    for (int d = 0; d < manifold.intrinsic_dim(); ++d) angles(i, d) = a(d);
  }
  return angles;
}

// Runs of equal analytic eigenvalues, as [begin, end) index ranges.
std::vector<std::pair<int, int>> multiplicity_groups(std::span<const EigenPair> basis) {
  std::vector<std::pair<int, int>> groups;
  int begin = 0;
  for (int i = 1; i <= static_cast<int>(basis.size()); ++i) {
    if (i == static_cast<int>(basis.size()) ||
        std::abs(basis[static_cast<std::size_t>(i)].eigenvalue - basis[static_cast<std::size_t>(begin)].eigenvalue) >
            1e-9) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

std::vector<EigenPair> first_eigenpairs(const AnalyticManifold& manifold, int count) {
  double lambda = 1.0;
  auto pairs = eigenpairs_upto(manifold, lambda);
  while (static_cast<int>(pairs.size()) < count) {
    lambda *= 2.0;
    pairs = eigenpairs_upto(manifold, lambda);
  }
  pairs.resize(static_cast<std::size_t>(count));
  return pairs;
}

double graph_measure(const ExperimentConfig& config, const AnalyticManifold& manifold) {
  return config.volume_measure ? manifold.measure() : 1.0;
}

}  // namespace

double eigenspace_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& graph_vectors, double volume) {
  if (analytic.rows() != graph_vectors.rows() || analytic.cols() != graph_vectors.cols() || analytic.cols() == 0) {
    throw InvalidArgument("eigenspace_error: shape mismatch");
  }
  const Eigen::MatrixXd u = std::sqrt(volume) * analytic;
  const Eigen::MatrixXd residual = u - graph_vectors * (graph_vectors.transpose() * u);
  const double n = static_cast<double>(analytic.rows());
  return std::sqrt(residual.squaredNorm() / n / static_cast<double>(analytic.cols()));
}

SpectralResult run_spectral_convergence(const ExperimentConfig& config) {
  config.validate();
  const auto manifold = AnalyticManifold::of_kind(config.manifold, config.radius);
  const auto basis = first_eigenpairs(manifold, config.num_eigenvalues + 1);
  // Eigenfunction errors use whole multiplicity groups, even past index M.
  const auto full = eigenpairs_upto(manifold, basis.back().eigenvalue + 1e-9);
  const auto groups = multiplicity_groups(full);
  if (config.n_list.front() < static_cast<int>(full.size())) {
    throw InvalidArgument("n must exceed the number of compared eigenpairs");
  }

  const auto cells = make_cells(config);
  std::vector<std::vector<SpectralRecord>> rows(cells.size());
  kernels::for_each_index(kernels::Exec::Parallel, cells.size(), [&](std::size_t c) {
    const Cell cell = cells[c];
    const auto cloud = sample_points(manifold, cell.n,
                                     cell_seed(config.master_seed, static_cast<std::uint64_t>(cell.n),
                                               static_cast<std::uint64_t>(cell.seed)));
    GraphOptions opts{graph_measure(config, manifold), kernels::Exec::Serial};
    const auto graph = build_graph(cloud, KernelScale::auto_rate(config.alpha), opts);
    const auto spec = eig_sym(graph.laplacian);
    const Eigen::MatrixXd phi = basis_matrix(manifold, full, point_angles(manifold, cloud.points));

    std::vector<double> fn_error(full.size());
    for (const auto& [b, e] : groups) {
      const double err = eigenspace_error(phi.middleCols(b, e - b), spec.eigenvectors.middleCols(b, e - b),
                                          manifold.measure());
      for (int i = b; i < e; ++i) fn_error[static_cast<std::size_t>(i)] = err;
    }
    for (std::size_t i = 0; i < basis.size(); ++i) {
      SpectralRecord r;
      r.n = cell.n;
      r.seed = cell.seed;
      r.t = graph.t;
      r.index = basis[i].index;
      r.analytic_eigenvalue = basis[i].eigenvalue;
      r.graph_eigenvalue = spec.eigenvalues(static_cast<Eigen::Index>(i));
      r.eigenvalue_error = std::abs(r.graph_eigenvalue - r.analytic_eigenvalue);
      r.eigenfunction_error = fn_error[i];
      rows[c].push_back(r);
    }
  });

  SpectralResult result;
  for (auto& block : rows) result.records.insert(result.records.end(), block.begin(), block.end());
  for (int n : config.n_list) {
    std::vector<double> eig_med, fn_med;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      std::vector<double> ev, fv;
      for (const auto& r : result.records) {
        if (r.n == n && r.index == static_cast<int>(i)) {
          ev.push_back(r.eigenvalue_error);
          fv.push_back(r.eigenfunction_error);
        }
      }
      eig_med.push_back(median(ev));
      fn_med.push_back(median(fv));
    }
    result.median_eigenvalue_error[n] = eig_med;
    result.median_eigenfunction_error[n] = fn_med;
  }
  return result;
}

MnnModel random_normalized_model(const ModelSpec& spec, std::uint64_t seed, double normalize_range) {
  MnnModel model = MnnModel::create(spec.widths, spec.taps, spec.nonlinearity, seed);
  std::mt19937_64 rng(mix_seed(seed, 0x51a7));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& bank : model.layers) {
    for (int p = 0; p < bank.out_features(); ++p) {
      for (int q = 0; q < bank.in_features(); ++q) {
        std::vector<double> taps(static_cast<std::size_t>(bank.num_taps()));
        for (double& h : taps) h = unit(rng);
        const double peak = non_amplifying_check(FirFilter(taps), {0.0, normalize_range}).max_abs_response;
        if (peak > 0.0) {
          for (double& h : taps) h /= peak;
        }
        bank.set_filter(p, q, FirFilter(taps));
      }
    }
  }
  return model;
}

MnnConvergenceResult run_mnn_convergence(const ExperimentConfig& config, const std::optional<MnnModel>& model_in) {
  config.validate();
  const auto manifold = AnalyticManifold::of_kind(config.manifold, config.radius);
  const auto signal = synth_bandlimited(manifold, config.signal, config.lambda_m);
  MnnConvergenceResult result;
  result.model = model_in ? *model_in : random_normalized_model(config.model, config.model_seed, config.normalize_range);
  const MnnModel& model = result.model;
  model.validate();
  if (model.input_features() != 1) throw InvalidArgument("convergence model must take one input feature");
  for (const auto& bank : model.layers)
    for (int p = 0; p < bank.out_features(); ++p)
      for (int q = 0; q < bank.in_features(); ++q)
        result.lipschitz.push_back(lipschitz_estimate(bank.filter(p, q), {0.0, config.lambda_ref}));

  const auto grid = make_grid(manifold, config.quadrature_nodes);
  const auto oracle = continuous_mnn_forward(model, signal, grid, config.lambda_ref);
  const auto groups = multiplicity_groups(signal.basis());

  const auto cells = make_cells(config);
  result.records.resize(cells.size());
  kernels::for_each_index(kernels::Exec::Parallel, cells.size(), [&](std::size_t c) {
    const Cell cell = cells[c];
    const auto cloud = sample_points(manifold, cell.n,
                                     cell_seed(config.master_seed, static_cast<std::uint64_t>(cell.n),
                                               static_cast<std::uint64_t>(cell.seed)));
    GraphOptions opts{graph_measure(config, manifold), kernels::Exec::Serial};
    const auto graph = build_graph(cloud, KernelScale::auto_rate(config.alpha), opts);
    const auto spec = eig_sym(graph.laplacian);
    const ShiftOperator shift(spec);

    const Eigen::MatrixXd x0 = sample_signal(signal, cloud);
    const Eigen::MatrixXd discrete = mnn_features(model, shift, x0);
    const Eigen::MatrixXd continuous = oracle.evaluate(cloud.points);

    MnnRecord& r = result.records[c];
    r.n = cell.n;
    r.seed = cell.seed;
    r.t = graph.t;
    r.output_error = graph_features_norm(discrete - continuous);

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto& bank = model.layers[l];
      const Eigen::MatrixXd input = oracle.layer_input_at(l, cloud.points);
      double d = 0.0;
      for (int p = 0; p < bank.out_features(); ++p) {
        for (int q = 0; q < bank.in_features(); ++q) {
          const FirFilter h = bank.filter(p, q);
          const Eigen::VectorXd graph_side = fir_apply(shift, h, input.col(q));
          d += graph_norm(graph_side - oracle.filtered_input_at(l, q, h, cloud.points));
        }
      }
      r.layer_discrepancy.push_back(d);
    }

    // <P_n f, phi_i^n> against <f, phi_i>, compared group-wise through norms.
    const double n = static_cast<double>(cell.n);
    double worst = 0.0;
    for (const auto& [b, e] : groups) {
      const Eigen::VectorXd graph_coeffs =
          spec.eigenvectors.middleCols(b, e - b).transpose() * x0.col(0) / std::sqrt(n);
      const double analytic = signal.coefficients().segment(b, e - b).norm() / std::sqrt(manifold.measure());
      worst = std::max(worst, std::abs(graph_coeffs.norm() - analytic));
    }
    r.inner_product_error = worst;
  });

  for (int n : config.n_list) {
    std::vector<double> errs;
    for (const auto& r : result.records)
      if (r.n == n) errs.push_back(r.output_error);
    result.median_output_error[n] = median(errs);
  }
  return result;
}

const ArchSummary& ClassificationResult::arch(const std::string& name) const {
  for (const auto& s : summary)
    if (s.arch == name) return s;
  throw InvalidArgument("no results for architecture '" + name + "'");
}

namespace {

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> test;
  int skipped = 0;
};

std::vector<Sample> to_samples(const std::vector<LabeledCloud>& clouds, double t) {
  std::vector<Sample> samples(clouds.size());
  kernels::for_each_index(kernels::Exec::Parallel, clouds.size(), [&](std::size_t i) {
    const PointCloud cloud = normalize_cloud(clouds[i].cloud);
    const auto graph = build_graph(cloud, KernelScale::fixed(t), {1.0, kernels::Exec::Serial});
    samples[i].shift = std::make_shared<const ShiftOperator>(eig_sym(graph.laplacian));
    samples[i].features = cloud.points;
    samples[i].label = clouds[i].label;
  });
  return samples;
}

Split load_split(const ExperimentConfig& config, int realization) {
  const std::uint64_t seed = mix_seed(config.master_seed, static_cast<std::uint64_t>(realization));
  Split split;
  if (config.dataset == "synthetic") {
    SynthOptions train_opts;
    train_opts.boxes = config.train_count / 2;
    train_opts.ellipsoids = config.train_count - train_opts.boxes;
    train_opts.n_points = config.n_points;
    train_opts.seed = mix_seed(seed, 1);
    SynthOptions test_opts = train_opts;
    test_opts.boxes = config.test_count / 2;
    test_opts.ellipsoids = config.test_count - test_opts.boxes;
    test_opts.seed = mix_seed(seed, 2);
    split.train = to_samples(synth_dataset(train_opts), config.kernel_t);
    split.test = to_samples(synth_dataset(test_opts), config.kernel_t);
    return split;
  }
  auto root = config.data_root ? config.data_root : dataset_root_from_env();
  if (!root) throw IoError(std::string("no dataset root: pass --data-root or set ") + kDataEnvVar);
  DatasetOptions opts;
  opts.n_points = config.n_points;
  opts.seed = seed;
  opts.per_category_limit = config.per_category_limit;
  opts.cache_dir = config.cache_dir;
  auto data = load_dataset(*root, opts);
  split.skipped = data.files_skipped;
  split.train = to_samples(data.train, config.kernel_t);
  split.test = to_samples(data.test, config.kernel_t);
  return split;
}

double mean_loss(const MnnModel& model, std::span<const Sample> data) {
  double total = 0.0;
  for (const auto& s : data) total += loss_bce(predict_logit(model, s), s.label);
  return total / static_cast<double>(data.size());
}

}  // namespace

ClassificationResult run_classification(const ExperimentConfig& config) {
  config.validate();
  ClassificationResult result;
  const auto& archs = config.architectures;
  const auto n_arch = archs.size();
  const auto n_real = static_cast<std::size_t>(config.realizations);
  std::vector<Split> splits;
  for (int r = 0; r < config.realizations; ++r) {
    splits.push_back(load_split(config, r));
    result.files_skipped += splits.back().skipped;
  }
  result.train_size = static_cast<int>(splits.front().train.size());
  result.test_size = static_cast<int>(splits.front().test.size());
  if (result.train_size == 0 || result.test_size == 0) throw IoError("dataset produced an empty split");

  std::vector<std::vector<CurveRow>> curves(n_real * n_arch);
  std::vector<double> final_error(n_real * n_arch, 0.0);
  kernels::for_each_index(kernels::Exec::Parallel, n_real * n_arch, [&](std::size_t job) {
    const std::size_t r = job / n_arch;
    const std::size_t a = job % n_arch;
    const Split& split = splits[r];
    const auto spec = architecture_spec(archs[a], config.classifier_taps);
    const std::uint64_t seed = mix_seed(mix_seed(config.master_seed, r), 100 + a);
    MnnModel model = MnnModel::create(spec.widths, spec.taps, spec.nonlinearity, seed);
    TrainConfig tc = config.train;
    tc.seed = mix_seed(seed, config.train.seed);

    auto& curve = curves[job];
    curve.push_back({archs[a], static_cast<int>(r), 0, mean_loss(model, split.train),
                     error_rate(model, split.test, kernels::Exec::Serial)});
    auto on_epoch = [&](int epoch, const MnnModel& m, double loss) {
      curve.push_back({archs[a], static_cast<int>(r), epoch + 1, loss, error_rate(m, split.test, kernels::Exec::Serial)});
    };
    train(std::move(model), split.train, tc, on_epoch, kernels::Exec::Serial);
    final_error[job] = curve.back().test_error;
  });

  for (const auto& c : curves) result.curve.insert(result.curve.end(), c.begin(), c.end());
  for (std::size_t a = 0; a < n_arch; ++a) {
    ArchSummary s;
    s.arch = archs[a];
    for (std::size_t r = 0; r < n_real; ++r) s.test_errors.push_back(final_error[r * n_arch + a]);
    s.mean = std::accumulate(s.test_errors.begin(), s.test_errors.end(), 0.0) / static_cast<double>(n_real);
    double ss = 0.0;
    for (double e : s.test_errors) ss += (e - s.mean) * (e - s.mean);
    s.stddev = n_real > 1 ? std::sqrt(ss / static_cast<double>(n_real - 1)) : 0.0;
    result.summary.push_back(std::move(s));
  }
  return result;
}

double gradient_check(const MnnModel& model, const ShiftOperator& shift, const Eigen::MatrixXd& x, int label,
                      double step) {
  const auto fwd = mnn_forward(model, shift, x);
  const auto analytic = mnn_backward(model, shift, fwd.tape, label).flatten();
  MnnModel probe = model;
  std::vector<double> params = model.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    probe.set_parameters(params);
    const double up = loss_bce(mnn_forward(probe, shift, x).logit, label);
    params[i] = saved - step;
    probe.set_parameters(params);
    const double down = loss_bce(mnn_forward(probe, shift, x).logit, label);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

GradCheckReport run_grad_check(const ExperimentConfig& config) {
  config.validate();
  GradCheckReport report;
  report.cases.resize(static_cast<std::size_t>(config.grad_cases));
  kernels::for_each_index(kernels::Exec::Parallel, report.cases.size(), [&](std::size_t c) {
    std::mt19937_64 rng(mix_seed(config.master_seed, c));
    std::uniform_int_distribution<int> nodes(4, 16), width(1, 4), taps(1, 4), depth(1, 2), coin(0, 1);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> scale(0.2, 1.0);

    GradCheckCase& gc = report.cases[c];
    gc.index = static_cast<int>(c);
    gc.nodes = nodes(rng);
    const int layers = depth(rng);
    for (int l = 0; l <= layers; ++l) gc.widths.push_back(width(rng));
    gc.taps = taps(rng);
    gc.nonlinearity = coin(rng) ? Nonlinearity::ReLU : Nonlinearity::Identity;

    PointCloud cloud;
    cloud.provenance = Provenance::Synthetic;
    cloud.points.resize(gc.nodes, 3);
    for (Eigen::Index i = 0; i < cloud.points.size(); ++i) cloud.points.data()[i] = gauss(rng);
    const auto graph = build_graph(cloud, KernelScale::fixed(scale(rng)), {1.0, kernels::Exec::Serial});
    const ShiftOperator shift(eig_sym(graph.laplacian));

    MnnModel model = MnnModel::create(gc.widths, gc.taps, gc.nonlinearity, rng());
    model.readout.bias = gauss(rng);
    Eigen::MatrixXd x(gc.nodes, gc.widths.front());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    const int label = coin(rng);
    gc.parameters = model.parameter_count();
    gc.max_rel_error = gradient_check(model, shift, x, label, config.fd_step);
  });
  for (const auto& gc : report.cases) report.max_rel_error = std::max(report.max_rel_error, gc.max_rel_error);
  return report;
}

}  // namespace mgnn
