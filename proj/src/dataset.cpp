#include "mgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mgnn/errors.hpp"
#include "mgnn/mesh.hpp"

namespace fs = std::filesystem;

namespace mgnn {

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::optional<fs::path> dataset_root_from_env() {
  const char* value = std::getenv(kDataEnvVar);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return fs::path(value);
}

PointCloud read_cloud_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> xyz;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x >> y >> z)) throw ParseError(line_no, "expected x,y,z in " + path.string());
    xyz.insert(xyz.end(), {x, y, z});
  }
  PointCloud cloud;
  cloud.provenance = Provenance::MeshSample;
  cloud.intrinsic_dim = 2;
  cloud.points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>(
      xyz.data(), static_cast<Eigen::Index>(xyz.size() / 3), 3);
  return cloud;
}

void write_cloud_csv(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    for (Eigen::Index c = 0; c < cloud.points.cols(); ++c) out << (c ? "," : "") << cloud.points(i, c);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

struct FileJob {
  fs::path path;
  std::string relative;
  std::string category;
  bool train = true;
};

std::vector<fs::path> sorted_off_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string cache_name(const std::string& relative, Eigen::Index n, std::uint64_t seed) {
  std::string name = relative;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == '.') c = '_';
  }
  return name + "_n" + std::to_string(n) + "_s" + std::to_string(seed) + ".csv";
}

}  // namespace

Dataset load_dataset(const fs::path& root, const DatasetOptions& options) {
  if (options.n_points < 2) throw InvalidArgument("n_points must be at least 2");
  if (!fs::is_directory(root)) throw IoError("dataset root not found: " + root.string());

  std::vector<fs::path> categories;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) categories.push_back(entry.path());
  }
  std::sort(categories.begin(), categories.end());
  if (categories.empty()) throw IoError("dataset root has no category folders: " + root.string());

  std::vector<FileJob> jobs;
  for (const auto& cat_dir : categories) {
    const std::string category = cat_dir.filename().string();
    for (const bool train : {true, false}) {
      const fs::path split_dir = cat_dir / (train ? "train" : "test");
      if (!fs::is_directory(split_dir)) throw IoError("missing folder: " + split_dir.string());
      auto files = sorted_off_files(split_dir);
      if (options.per_category_limit > 0 && files.size() > static_cast<std::size_t>(options.per_category_limit)) {
        files.resize(static_cast<std::size_t>(options.per_category_limit));
      }
      for (auto& f : files) {
        const std::string rel = category + "/" + (train ? "train/" : "test/") + f.filename().string();
        jobs.push_back({f, rel, category, train});
      }
    }
  }
  if (options.cache_dir) fs::create_directories(*options.cache_dir);

  std::vector<std::optional<PointCloud>> clouds(jobs.size());
  std::vector<std::string> failures(jobs.size());
  kernels::for_each_index(options.exec, jobs.size(), [&](std::size_t j) {
    const auto& job = jobs[j];
    const std::uint64_t seed = mix_seed(options.seed, fnv1a(job.relative));
    try {
      PointCloud sampled;
      std::optional<fs::path> cached;
      if (options.cache_dir) cached = *options.cache_dir / cache_name(job.relative, options.n_points, options.seed);
      if (cached && fs::exists(*cached)) {
        sampled = read_cloud_csv(*cached);
        if (sampled.size() != options.n_points) throw ParseError(0, "stale cache entry " + cached->string());
      } else {
        sampled = sample_mesh_surface(read_off_file(job.path), options.n_points, seed);
        if (cached) write_cloud_csv(*cached, sampled);
      }
      clouds[j] = normalize_cloud(sampled);
    } catch (const std::exception& e) {
      failures[j] = e.what();
    }
  });

  Dataset data;
  data.files_seen = static_cast<int>(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!clouds[j]) {
      ++data.files_skipped;
      std::cerr << "warning: skipping " << jobs[j].path.string() << ": " << failures[j] << '\n';
      continue;
    }
    LabeledCloud item{std::move(*clouds[j]), jobs[j].category == kPositiveCategory ? 1 : 0, jobs[j].category};
    (jobs[j].train ? data.train : data.test).push_back(std::move(item));
  }
  if (data.files_seen == 0) throw IoError("no OFF files under " + root.string());
  const double parsed = static_cast<double>(data.files_seen - data.files_skipped) / data.files_seen;
  if (parsed < options.min_parse_fraction) {
    throw IoError("only " + std::to_string(data.files_seen - data.files_skipped) + " of " +
                  std::to_string(data.files_seen) + " files parsed under " + root.string());
  }
  return data;
}

Eigen::MatrixXd sample_box_surface(const Eigen::Vector3d& half_extents, Eigen::Index n, std::mt19937_64& rng) {
  if ((half_extents.array() <= 0.0).any()) throw InvalidArgument("box half-extents must be positive");
  const double ax = half_extents.y() * half_extents.z();
  const double ay = half_extents.x() * half_extents.z();
  const double az = half_extents.x() * half_extents.y();
  // Faces with normal +-x, +-y, +-z.
  std::discrete_distribution<int> face({ax, ax, ay, ay, az, az});
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int f = face(rng);
    const int axis = f / 2;
    Eigen::Vector3d p;
    for (int c = 0; c < 3; ++c) p(c) = unit(rng) * half_extents(c);
    p(axis) = (f % 2 == 0 ? 1.0 : -1.0) * half_extents(axis);
    pts.row(i) = p.transpose();
  }
  return pts;
}

Eigen::MatrixXd sample_ellipsoid_surface(const Eigen::Vector3d& radii, Eigen::Index n, std::mt19937_64& rng) {
  if ((radii.array() <= 0.0).any()) throw InvalidArgument("ellipsoid radii must be positive");
  // Map uniform sphere directions through diag(radii) and accept with
  // probability proportional to the area stretch of that map.
  const double a = radii.x(), b = radii.y(), c = radii.z();
  const double max_stretch = std::max({a * b, a * c, b * c});
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(n, 3);
  Eigen::Index filled = 0;
  while (filled < n) {
    Eigen::Vector3d u(gauss(rng), gauss(rng), gauss(rng));
    const double len = u.norm();
    if (len == 0.0) continue;
    u /= len;
    const double stretch = std::sqrt(std::pow(b * c * u.x(), 2) + std::pow(a * c * u.y(), 2) +
                                     std::pow(a * b * u.z(), 2));
    if (unit(rng) * max_stretch > stretch) continue;
    pts.row(filled++) = radii.cwiseProduct(u).transpose();
  }
  return pts;
}

std::vector<LabeledCloud> synth_dataset(const SynthOptions& options) {
  if (options.boxes < 1 || options.ellipsoids < 1) throw InvalidArgument("synthetic counts must be at least 1");
  if (options.n_points < 2) throw InvalidArgument("n_points must be at least 2");
  if (!(options.min_extent > 0.0) || options.max_extent < options.min_extent) {
    throw InvalidArgument("bad synthetic extent range");
  }
  const int total = options.boxes + options.ellipsoids;
  std::vector<LabeledCloud> out(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> extent(options.min_extent, options.max_extent);
    const Eigen::Vector3d dims(extent(rng), extent(rng), extent(rng));
    const bool box = i < options.boxes;
    LabeledCloud& item = out[static_cast<std::size_t>(i)];
    item.cloud.provenance = Provenance::Synthetic;
    item.cloud.intrinsic_dim = 2;
    item.cloud.points = box ? sample_box_surface(dims, options.n_points, rng)
                            : sample_ellipsoid_surface(dims, options.n_points, rng);
    item.label = box ? 0 : 1;
    item.category = box ? "box" : "ellipsoid";
  }
  return out;
}

}  // namespace mgnn
