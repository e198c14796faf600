// Command-line driver for the convergence, classification and gradient-check
// experiments. Results go to <out>/records.csv, summary.json and meta.json.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgnn/errors.hpp"
#include "mgnn/experiments.hpp"

namespace {

struct RawOptions {
  std::string manifold;
  std::string nonlinearity;
  std::string data_root;
  std::string cache_dir;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> signal;
};

void add_common(CLI::App* cmd, mgnn::ExperimentConfig& c, RawOptions& raw) {
  cmd->add_option("--config", raw.config_path, "JSON file whose keys override the flags");
  cmd->add_option("--out", raw.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--master-seed", c.master_seed, "Seed all cell and model streams derive from")->capture_default_str();
}

void add_manifold(CLI::App* cmd, mgnn::ExperimentConfig& c, RawOptions& raw) {
  cmd->add_option("--manifold", raw.manifold, "circle or torus")->capture_default_str();
  cmd->add_option("--radius", c.radius, "Manifold radius")->capture_default_str();
  cmd->add_option("--n", c.n_list, "Ascending sample sizes")->delimiter(',')->capture_default_str();
  cmd->add_option("--seeds", c.seeds, "Sampling seeds")->delimiter(',')->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "Kernel scale t_n = n^(-1/(d+2+alpha))")->capture_default_str();
  cmd->add_option("--volume-measure", c.volume_measure, "Scale edge weights by the manifold volume")
      ->capture_default_str();
}

void add_train(CLI::App* cmd, mgnn::TrainConfig& t) {
  cmd->add_option("--lr", t.learning_rate)->capture_default_str();
  cmd->add_option("--beta1", t.beta1)->capture_default_str();
  cmd->add_option("--beta2", t.beta2)->capture_default_str();
  cmd->add_option("--adam-eps", t.epsilon)->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--epochs", t.epochs)->capture_default_str();
  cmd->add_option("--train-seed", t.seed)->capture_default_str();
}

void resolve(mgnn::ExperimentConfig& c, const RawOptions& raw) {
  if (!raw.manifold.empty()) c.manifold = mgnn::parse_manifold_kind(raw.manifold);
  if (!raw.nonlinearity.empty()) c.model.nonlinearity = mgnn::parse_nonlinearity(raw.nonlinearity);
  if (!raw.data_root.empty()) c.data_root = raw.data_root;
  if (!raw.cache_dir.empty()) c.cache_dir = raw.cache_dir;
  if (!raw.out_dir.empty()) c.out_dir = raw.out_dir;
  if (!raw.signal.empty()) {
    c.signal.clear();
    for (const auto& item : raw.signal) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw mgnn::InvalidArgument("signal entries look like index:value");
      c.signal[std::stoi(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
    }
  }
  if (!raw.config_path.empty()) {
    std::ifstream in(raw.config_path);
    if (!in) throw mgnn::IoError("cannot open " + raw.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw mgnn::InvalidArgument(raw.config_path + ": " + e.what());
    }
    const auto kind = c.kind;
    from_json(j, c);
    c.kind = kind;
  }
  c.validate();
}

void print_summary(const mgnn::ExperimentConfig& c) {
  std::ifstream in(c.out_dir / "summary.json");
  std::cout << in.rdbuf();
  std::cout << "wrote " << (c.out_dir / "records.csv").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph and manifold neural network experiments"};
  app.require_subcommand(1);

  mgnn::ExperimentConfig spectral, mnn, classify, grad;
  spectral.kind = mgnn::ExperimentKind::SpectralConvergence;
  mnn.kind = mgnn::ExperimentKind::MnnConvergence;
  classify.kind = mgnn::ExperimentKind::Classification;
  grad.kind = mgnn::ExperimentKind::GradCheck;
  RawOptions raw_spectral, raw_mnn, raw_classify, raw_grad;

  auto* s = app.add_subcommand("spectral-convergence", "Graph Laplacian eigenpairs against the analytic spectrum");
  add_common(s, spectral, raw_spectral);
  add_manifold(s, spectral, raw_spectral);
  s->add_option("--num-eigenvalues", spectral.num_eigenvalues, "Compare eigenpairs 0..M")->capture_default_str();

  auto* m = app.add_subcommand("mnn-convergence", "Discretized network against the continuous network");
  add_common(m, mnn, raw_mnn);
  add_manifold(m, mnn, raw_mnn);
  m->add_option("--widths", mnn.model.widths, "Feature widths F_0,...,F_L")->delimiter(',')->capture_default_str();
  m->add_option("--taps", mnn.model.taps, "Filter taps K")->capture_default_str();
  m->add_option("--nonlinearity", raw_mnn.nonlinearity, "relu or identity");
  m->add_option("--model-seed", mnn.model_seed)->capture_default_str();
  m->add_option("--signal", raw_mnn.signal, "Coefficients as index:value")->delimiter(',');
  m->add_option("--lambda-m", mnn.lambda_m, "Signal bandwidth")->capture_default_str();
  m->add_option("--lambda-ref", mnn.lambda_ref, "Oracle spectral truncation")->capture_default_str();
  m->add_option("--quadrature-nodes", mnn.quadrature_nodes, "Nodes per angle, 0 for the default")
      ->capture_default_str();
  m->add_option("--normalize-range", mnn.normalize_range, "Filters satisfy max|hhat| = 1 on [0, this]")
      ->capture_default_str();

  auto* c = app.add_subcommand("classify", "Train GF and GNN classifiers on point clouds");
  add_common(c, classify, raw_classify);
  c->add_option("--dataset", classify.dataset, "synthetic or modelnet")->capture_default_str();
  c->add_option("--data-root", raw_classify.data_root, "ModelNet10 root (default: $MANIFOLD_GNN_DATA)");
  c->add_option("--cache-dir", raw_classify.cache_dir, "Cache sampled clouds as CSV here");
  c->add_option("--per-category-limit", classify.per_category_limit, "0 for no limit")->capture_default_str();
  c->add_option("--train-count", classify.train_count, "Synthetic training clouds")->capture_default_str();
  c->add_option("--test-count", classify.test_count, "Synthetic test clouds")->capture_default_str();
  c->add_option("--realizations", classify.realizations, "Sampling realizations")->capture_default_str();
  c->add_option("--points", classify.n_points, "Points per cloud")->capture_default_str();
  c->add_option("--kernel-t", classify.kernel_t, "Gaussian kernel scale t")->capture_default_str();
  c->add_option("--taps", classify.classifier_taps, "Filter taps K")->capture_default_str();
  c->add_option("--arch", classify.architectures, "GF1Ly, GF2Ly, GNN1Ly, GNN2Ly")->delimiter(',')
      ->capture_default_str();
  add_train(c, classify.train);

  auto* g = app.add_subcommand("grad-check", "Finite-difference gradient suite");
  add_common(g, grad, raw_grad);
  g->add_option("--cases", grad.grad_cases)->capture_default_str();
  g->add_option("--step", grad.fd_step, "Central difference step")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) {
      resolve(spectral, raw_spectral);
      mgnn::write_spectral_outputs(spectral, mgnn::run_spectral_convergence(spectral));
      print_summary(spectral);
    } else if (m->parsed()) {
      resolve(mnn, raw_mnn);
      mgnn::write_mnn_outputs(mnn, mgnn::run_mnn_convergence(mnn));
      print_summary(mnn);
    } else if (c->parsed()) {
      resolve(classify, raw_classify);
      mgnn::write_classification_outputs(classify, mgnn::run_classification(classify));
      print_summary(classify);
    } else if (g->parsed()) {
      resolve(grad, raw_grad);
      const auto report = mgnn::run_grad_check(grad);
      mgnn::write_grad_check_outputs(grad, report);
      print_summary(grad);
      return report.max_rel_error <= 1e-4 ? 0 : 3;
    }
  } catch (const mgnn::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
