#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/kernels.hpp"
#include "mgnn/point_cloud.hpp"

namespace mgnn {

inline constexpr const char* kPositiveCategory = "chair";
inline constexpr const char* kDataEnvVar = "MANIFOLD_GNN_DATA";

struct LabeledCloud {
  PointCloud cloud;
  /// 1 for the positive category, 0 otherwise.
  int label = 0;
  std::string category;
};

struct DatasetOptions {
  Eigen::Index n_points = 300;
  std::uint64_t seed = 0;
  /// Max files per (category, split); 0 means no limit.
  int per_category_limit = 0;
  /// When set, sampled clouds are cached here as x,y,z CSV.
  std::optional<std::filesystem::path> cache_dir;
  /// Abort if fewer files than this fraction parse.
  double min_parse_fraction = 0.95;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct Dataset {
  std::vector<LabeledCloud> train;
  std::vector<LabeledCloud> test;
  int files_seen = 0;
  int files_skipped = 0;
};

/// Reads root/<category>/{train,test}/*.off. Files are visited in sorted
/// order, each sampled with a seed derived from options.seed and its relative
/// path, then normalized. Unparseable files are skipped with a warning on
/// stderr. Throws IoError for a missing or empty root, a category without
/// train/test folders, or too many skipped files.
Dataset load_dataset(const std::filesystem::path& root, const DatasetOptions& options);

/// Value of MANIFOLD_GNN_DATA, if set and non-empty.
std::optional<std::filesystem::path> dataset_root_from_env();

/// Reads x,y,z rows.
PointCloud read_cloud_csv(const std::filesystem::path& path);
void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);

struct SynthOptions {
  int boxes = 50;
  int ellipsoids = 50;
  Eigen::Index n_points = 300;
  std::uint64_t seed = 0;
  /// Box half-extents and ellipsoid radii are drawn uniformly from this range.
  double min_extent = 0.6;
  double max_extent = 1.0;
};

/// Boxes (label 0, category "box") followed by ellipsoids (label 1,
/// category "ellipsoid"), sampled uniformly on their surfaces.
std::vector<LabeledCloud> synth_dataset(const SynthOptions& options);

/// Uniform on the surface of the axis-aligned box [-h, h].
Eigen::MatrixXd sample_box_surface(const Eigen::Vector3d& half_extents, Eigen::Index n, std::mt19937_64& rng);
/// Uniform on the ellipsoid surface with the given semi-axes.
Eigen::MatrixXd sample_ellipsoid_surface(const Eigen::Vector3d& radii, Eigen::Index n, std::mt19937_64& rng);

/// FNV-1a, used to derive per-file seeds.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);
/// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace mgnn
