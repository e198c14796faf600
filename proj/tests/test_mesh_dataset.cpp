#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "mgnn/dataset.hpp"
#include "mgnn/errors.hpp"
#include "mgnn/mesh.hpp"

using namespace mgnn;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSquare =
    "OFF\n"
    "# unit square in the z = 0 plane\n"
    "4 2 0\n"
    "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
    "3 0 1 2\n3 0 2 3\n";

constexpr const char* kTetra =
    "OFF\n4 4 6\n"
    "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
    "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << text;
}

// root/<category>/<split>/<category>_<i>.off with `per_split` tetrahedra each.
void make_tree(const fs::path& root, const std::vector<std::string>& categories, int per_split) {
  for (const auto& c : categories) {
    for (const char* split : {"train", "test"}) {
      for (int i = 0; i < per_split; ++i) {
        write_text(root / c / split / (c + "_" + std::to_string(i) + ".off"), kTetra);
      }
    }
  }
}

}  // namespace

TEST(ParseOff, SquareAndComments) {
  const auto mesh = parse_off(kSquare);
  EXPECT_EQ(mesh.vertices.rows(), 4);
  ASSERT_EQ(mesh.faces.size(), 2u);
  EXPECT_NEAR(mesh.total_area(), 1.0, 1e-15);
  EXPECT_EQ(mesh.faces[1], (std::array<int, 3>{0, 2, 3}));
}

TEST(ParseOff, HeaderVariantsAndPolygons) {
  const auto a = parse_off("OFF 4 1 0\n0 0 0\n2 0 0\n2 1 0\n0 1 0\n4 0 1 2 3\n");
  ASSERT_EQ(a.faces.size(), 2u);
  EXPECT_NEAR(a.total_area(), 2.0, 1e-15);
  const auto b = parse_off("OFF3 1 0\n\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  EXPECT_EQ(b.vertices.rows(), 3);
  EXPECT_NEAR(b.total_area(), 0.5, 1e-15);
}

TEST(ParseOff, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_off(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    ADD_FAILURE() << "no ParseError for:\n" << text;
    return 999;
  };
  EXPECT_EQ(line_of("PLY\n3 1 0\n"), 1u);
  EXPECT_EQ(line_of("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n"), 4u);
  EXPECT_EQ(line_of("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"), 6u);
  EXPECT_EQ(line_of("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n"), 6u);
  EXPECT_EQ(line_of("OFF\n3 1 0\n0 0 0\n1 0 0\n"), 0u);
  EXPECT_EQ(line_of("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"), 0u);
  try {
    parse_off("OFF\n3 1 0\n0 0 0\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(ReadOff, MissingFileIsIoError) { EXPECT_THROW(read_off_file("/nonexistent/mesh.off"), IoError); }

TEST(SampleMesh, SquareIsUniform) {
  const auto cloud = sample_mesh_surface(parse_off(kSquare), 20000, 3);
  EXPECT_EQ(cloud.size(), 20000);
  EXPECT_EQ(cloud.provenance, Provenance::MeshSample);
  EXPECT_EQ(cloud.intrinsic_dim, 2);
  const Eigen::RowVector3d mean = cloud.points.colwise().mean();
  EXPECT_NEAR(mean(0), 0.5, 0.01);
  EXPECT_NEAR(mean(1), 0.5, 0.01);
  EXPECT_EQ(cloud.points.col(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(cloud.points.minCoeff(), 0.0);
  EXPECT_LE(cloud.points.maxCoeff(), 1.0);
}

TEST(SampleMesh, TriangleBarycentricAndAreaRatio) {
  const auto tri = sample_mesh_surface(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"), 20000, 4);
  EXPECT_LE((tri.points.col(0) + tri.points.col(1)).maxCoeff(), 1.0 + 1e-12);
  EXPECT_NEAR(tri.points.col(0).mean(), 1.0 / 3.0, 0.01);
  EXPECT_NEAR(tri.points.col(1).mean(), 1.0 / 3.0, 0.01);

  // Two disjoint triangles with areas 3 : 1.
  const auto two = parse_off(
      "OFF\n6 2 0\n"
      "0 0 0\n3 0 0\n0 2 0\n"
      "10 0 0\n11 0 0\n10 2 0\n"
      "3 0 1 2\n3 3 4 5\n");
  const auto c = sample_mesh_surface(two, 40000, 5);
  const double big = (c.points.col(0).array() < 5.0).cast<double>().mean();
  EXPECT_NEAR(big, 0.75, 0.01);
}

TEST(SampleMesh, DeterministicAndValidated) {
  const auto mesh = parse_off(kTetra);
  EXPECT_EQ(sample_mesh_surface(mesh, 50, 9).points, sample_mesh_surface(mesh, 50, 9).points);
  EXPECT_NE(sample_mesh_surface(mesh, 50, 9).points, sample_mesh_surface(mesh, 50, 10).points);
  EXPECT_THROW(sample_mesh_surface(mesh, 0, 1), InvalidArgument);
  EXPECT_THROW(sample_mesh_surface(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n"), 10, 1),
               InvalidArgument);
}

TEST(NormalizeCloud, Examples) {
  PointCloud c;
  c.points.resize(2, 3);
  c.points << 1, 1, 1, 3, 1, 1;
  const auto n = normalize_cloud(c);
  EXPECT_NEAR(n.points(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(n.points(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(n.points.col(1).cwiseAbs().maxCoeff(), 0.0, 1e-15);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(5.0, 3.0);
  PointCloud r;
  r.points = Eigen::MatrixXd::NullaryExpr(40, 3, [&] { return g(rng); });
  const auto rn = normalize_cloud(r);
  EXPECT_LE(rn.points.colwise().mean().norm(), 1e-13);
  EXPECT_NEAR(rn.points.rowwise().norm().maxCoeff(), 1.0, 1e-14);

  PointCloud same;
  same.points = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_THROW(normalize_cloud(same), InvalidArgument);
}

TEST(LoadDataset, CountsLabelsAndLimit) {
  TempDir tmp("mgnn_dataset_counts");
  make_tree(tmp.path(), {"chair", "desk", "table"}, 3);
  DatasetOptions opts;
  opts.n_points = 40;
  const auto ds = load_dataset(tmp.path(), opts);
  EXPECT_EQ(ds.train.size(), 9u);
  EXPECT_EQ(ds.test.size(), 9u);
  EXPECT_EQ(ds.files_seen, 18);
  EXPECT_EQ(ds.files_skipped, 0);
  int positives = 0;
  for (const auto& s : ds.train) {
    EXPECT_EQ(s.label, s.category == "chair" ? 1 : 0);
    EXPECT_EQ(s.cloud.size(), 40);
    EXPECT_NEAR(s.cloud.points.rowwise().norm().maxCoeff(), 1.0, 1e-12);
    positives += s.label;
  }
  EXPECT_EQ(positives, 3);
  EXPECT_EQ(ds.train.front().category, "chair");

  // Same tetrahedron, different paths: different samples.
  EXPECT_NE(ds.train[0].cloud.points, ds.train[1].cloud.points);
  const auto again = load_dataset(tmp.path(), opts);
  EXPECT_EQ(again.train[4].cloud.points, ds.train[4].cloud.points);

  opts.per_category_limit = 2;
  const auto limited = load_dataset(tmp.path(), opts);
  EXPECT_EQ(limited.train.size(), 6u);
  EXPECT_EQ(limited.test.size(), 6u);
}

TEST(LoadDataset, MissingOrEmptyRoot) {
  EXPECT_THROW(load_dataset("/nonexistent/modelnet", {}), IoError);
  TempDir empty("mgnn_dataset_empty");
  EXPECT_THROW(load_dataset(empty.path(), {}), IoError);

  TempDir partial("mgnn_dataset_partial");
  write_text(partial.path() / "chair" / "train" / "a.off", kTetra);
  EXPECT_THROW(load_dataset(partial.path(), {}), IoError);
}

TEST(LoadDataset, SkipsThenAbortsOnBadFiles) {
  TempDir tmp("mgnn_dataset_bad");
  make_tree(tmp.path(), {"chair", "sofa"}, 10);
  write_text(tmp.path() / "sofa" / "train" / "broken.off", "OFF\n3 1 0\n0 0 0\n");
  DatasetOptions opts;
  opts.n_points = 20;
  const auto ds = load_dataset(tmp.path(), opts);
  EXPECT_EQ(ds.files_seen, 41);
  EXPECT_EQ(ds.files_skipped, 1);
  EXPECT_EQ(ds.train.size(), 20u);

  write_text(tmp.path() / "sofa" / "test" / "broken2.off", "garbage\n");
  write_text(tmp.path() / "sofa" / "test" / "broken3.off", "garbage\n");
  EXPECT_THROW(load_dataset(tmp.path(), opts), IoError);
  opts.min_parse_fraction = 0.5;
  EXPECT_EQ(load_dataset(tmp.path(), opts).files_skipped, 3);
}

TEST(LoadDataset, CacheRoundTrip) {
  TempDir tmp("mgnn_dataset_cache");
  make_tree(tmp.path() / "data", {"chair", "lamp"}, 2);
  DatasetOptions opts;
  opts.n_points = 30;
  opts.cache_dir = tmp.path() / "cache";
  const auto first = load_dataset(tmp.path() / "data", opts);
  int cached = 0;
  for (const auto& e : fs::directory_iterator(*opts.cache_dir)) cached += e.path().extension() == ".csv";
  EXPECT_EQ(cached, 8);
  const auto second = load_dataset(tmp.path() / "data", opts);
  for (std::size_t i = 0; i < first.train.size(); ++i) {
    EXPECT_LE((first.train[i].cloud.points - second.train[i].cloud.points).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(CloudCsv, RoundTripAndErrors) {
  TempDir tmp("mgnn_cloud_csv");
  PointCloud c;
  c.points.resize(3, 3);
  c.points << 0.1, -2.5, 3e-7, 1, 2, 3, 1.0 / 3.0, 2.0 / 3.0, -1.0 / 7.0;
  write_cloud_csv(tmp.path() / "c.csv", c);
  EXPECT_EQ(read_cloud_csv(tmp.path() / "c.csv").points, c.points);
  EXPECT_THROW(read_cloud_csv(tmp.path() / "missing.csv"), IoError);
  write_text(tmp.path() / "bad.csv", "1,2\n");
  EXPECT_ANY_THROW(read_cloud_csv(tmp.path() / "bad.csv"));
}

TEST(SynthDataset, Examples) {
  SynthOptions opts;
  opts.boxes = 3;
  opts.ellipsoids = 2;
  opts.n_points = 200;
  const auto data = synth_dataset(opts);
  ASSERT_EQ(data.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(data[i].label, i < 3 ? 0 : 1);
    EXPECT_EQ(data[i].category, i < 3 ? "box" : "ellipsoid");
    EXPECT_EQ(data[i].cloud.size(), 200);
  }
  EXPECT_EQ(synth_dataset(opts)[4].cloud.points, data[4].cloud.points);
  opts.boxes = 0;
  EXPECT_THROW(synth_dataset(opts), InvalidArgument);
}

TEST(SynthDataset, SurfacesAreExact) {
  std::mt19937_64 rng(6);
  const Eigen::Vector3d h(0.5, 1.0, 2.0);
  const auto box = sample_box_surface(h, 3000, rng);
  int on_z = 0;
  for (Eigen::Index i = 0; i < box.rows(); ++i) {
    const Eigen::Vector3d p = box.row(i).transpose();
    const double face_gap = ((p.cwiseAbs() - h).cwiseAbs()).minCoeff();
    EXPECT_LE(face_gap, 1e-12);
    EXPECT_LE((p.cwiseAbs() - h).maxCoeff(), 1e-12);
    on_z += std::abs(std::abs(p(2)) - 2.0) < 1e-12;
  }
  // Face pairs have areas 4 (z), 8 (y) and 16 (x).
  EXPECT_NEAR(on_z / 3000.0, 1.0 / 7.0, 0.02);

  const Eigen::Vector3d r(0.6, 0.8, 1.0);
  const auto ell = sample_ellipsoid_surface(r, 3000, rng);
  for (Eigen::Index i = 0; i < ell.rows(); ++i) {
    EXPECT_NEAR(ell.row(i).transpose().cwiseQuotient(r).squaredNorm(), 1.0, 1e-12);
  }
}

TEST(Seeds, MixAndHash) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
  EXPECT_EQ(mix_seed(7, 8), mix_seed(7, 8));
}

TEST(DataEnv, ReadsVariable) {
  ::setenv(kDataEnvVar, "/some/where", 1);
  ASSERT_TRUE(dataset_root_from_env().has_value());
  EXPECT_EQ(*dataset_root_from_env(), fs::path("/some/where"));
  ::setenv(kDataEnvVar, "", 1);
  EXPECT_FALSE(dataset_root_from_env().has_value());
  ::unsetenv(kDataEnvVar);
  EXPECT_FALSE(dataset_root_from_env().has_value());
}
