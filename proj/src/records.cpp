#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mgnn/errors.hpp"
#include "mgnn/experiments.hpp"
#include "mgnn/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mgnn {

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  CsvWriter& cell(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }

  CsvWriter& cell(double v) {
    if (!std::isfinite(v)) throw NumericalFailure("non-finite value in " + path_.string());
    sep();
    out_ << v;
    return *this;
  }

  CsvWriter& cell(long long v) {
    sep();
    out_ << v;
    return *this;
  }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  fs::path path_;
  std::ofstream out_;
  bool first_ = true;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void prepare(const ExperimentConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());
  write_json(config.out_dir / "meta.json", run_metadata(config));
}

std::string widths_text(const std::vector<int>& widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? "-" : "") + std::to_string(widths[i]);
  return s;
}

}  // namespace

json run_metadata(const ExperimentConfig& config) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  json meta;
  meta["experiment"] = to_string(config.kind);
  meta["config"] = config;
  meta["created_utc"] = stamp.str();
  meta["threads"] = kernels::max_threads();
  meta["compiler"] = __VERSION__;
  meta["seeding"] =
      "cell seed = splitmix(splitmix(master_seed, n), seed); classification realization r uses "
      "splitmix(master_seed, r)";
  if (config.kind == ExperimentKind::MnnConvergence) {
    meta["oracle"] = {{"lambda_ref", config.lambda_ref},
                      {"note", "continuous network evaluated with spectra truncated at lambda_ref and nonlinearity "
                               "applied on a quadrature grid"}};
  }
  return meta;
}

void write_spectral_outputs(const ExperimentConfig& config, const SpectralResult& result) {
  prepare(config);
  CsvWriter csv(config.out_dir / "records.csv", {"n", "seed", "t", "index", "analytic_eigenvalue", "graph_eigenvalue",
                                                 "eigenvalue_error", "eigenfunction_error"});
  for (const auto& r : result.records) {
    csv.cell(static_cast<long long>(r.n)).cell(static_cast<long long>(r.seed)).cell(r.t);
    csv.cell(static_cast<long long>(r.index)).cell(r.analytic_eigenvalue).cell(r.graph_eigenvalue);
    csv.cell(r.eigenvalue_error).cell(r.eigenfunction_error).end_row();
  }
  csv.close();

  json summary;
  summary["experiment"] = to_string(config.kind);
  json per_n = json::array();
  for (const auto& [n, med] : result.median_eigenvalue_error) {
    per_n.push_back({{"n", n},
                     {"median_eigenvalue_error", med},
                     {"median_eigenfunction_error", result.median_eigenfunction_error.at(n)}});
  }
  summary["medians"] = per_n;
  write_json(config.out_dir / "summary.json", summary);
}

void write_mnn_outputs(const ExperimentConfig& config, const MnnConvergenceResult& result) {
  prepare(config);
  std::vector<std::string> header{"n", "seed", "t", "output_error", "inner_product_error"};
  for (std::size_t l = 0; l < result.model.layers.size(); ++l) header.push_back("d_" + std::to_string(l + 1));
  CsvWriter csv(config.out_dir / "records.csv", header);
  for (const auto& r : result.records) {
    csv.cell(static_cast<long long>(r.n)).cell(static_cast<long long>(r.seed)).cell(r.t);
    csv.cell(r.output_error).cell(r.inner_product_error);
    for (double d : r.layer_discrepancy) csv.cell(d);
    csv.end_row();
  }
  csv.close();

  json summary;
  summary["experiment"] = to_string(config.kind);
  json med = json::array();
  for (const auto& [n, e] : result.median_output_error) med.push_back({{"n", n}, {"median_output_error", e}});
  summary["medians"] = med;
  summary["model_widths"] = result.model.widths();
  summary["filter_lipschitz_estimates"] = result.lipschitz;
  write_json(config.out_dir / "summary.json", summary);
}

void write_classification_outputs(const ExperimentConfig& config, const ClassificationResult& result) {
  prepare(config);
  CsvWriter csv(config.out_dir / "records.csv", {"arch", "realization", "epoch", "train_loss", "test_error"});
  for (const auto& row : result.curve) {
    csv.cell(row.arch).cell(static_cast<long long>(row.realization)).cell(static_cast<long long>(row.epoch));
    csv.cell(row.train_loss).cell(row.test_error).end_row();
  }
  csv.close();

  json summary;
  summary["experiment"] = to_string(config.kind);
  summary["dataset"] = config.dataset;
  summary["train_size"] = result.train_size;
  summary["test_size"] = result.test_size;
  summary["files_skipped"] = result.files_skipped;
  json archs = json::array();
  for (const auto& s : result.summary) {
    archs.push_back({{"arch", s.arch}, {"mean_test_error", s.mean}, {"std_test_error", s.stddev},
                     {"test_errors", s.test_errors}});
  }
  summary["architectures"] = archs;
  write_json(config.out_dir / "summary.json", summary);
}

void write_grad_check_outputs(const ExperimentConfig& config, const GradCheckReport& report) {
  prepare(config);
  CsvWriter csv(config.out_dir / "records.csv",
                {"case", "nodes", "widths", "taps", "nonlinearity", "parameters", "max_rel_error"});
  for (const auto& c : report.cases) {
    csv.cell(static_cast<long long>(c.index)).cell(static_cast<long long>(c.nodes)).cell(widths_text(c.widths));
    csv.cell(static_cast<long long>(c.taps)).cell(std::string(to_string(c.nonlinearity)));
    csv.cell(static_cast<long long>(c.parameters)).cell(c.max_rel_error).end_row();
  }
  csv.close();

  json summary;
  summary["experiment"] = to_string(config.kind);
  summary["cases"] = report.cases.size();
  summary["max_rel_error"] = report.max_rel_error;
  write_json(config.out_dir / "summary.json", summary);
}

}  // namespace mgnn
