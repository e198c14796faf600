#include "mgnn/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mgnn/errors.hpp"

namespace mgnn {

std::vector<double> TriangleMesh::face_areas() const {
  std::vector<double> areas;
  areas.reserve(faces.size());
  for (const auto& f : faces) {
    const Eigen::Vector3d a = vertices.row(f[0]).transpose();
    const Eigen::Vector3d b = vertices.row(f[1]).transpose();
    const Eigen::Vector3d c = vertices.row(f[2]).transpose();
    areas.push_back(0.5 * (b - a).cross(c - a).norm());
  }
  return areas;
}

double TriangleMesh::total_area() const {
  double total = 0.0;
  for (double a : face_areas()) total += a;
  return total;
}

namespace {

// Splits the text into meaningful lines, dropping comments and blanks.
class OffLines {
 public:
  explicit OffLines(std::string_view text) : text_(text) {}

  // Returns false at end of input.
  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
      std::string_view raw = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      const auto first = raw.find_first_not_of(" \t\r");
      if (first == std::string_view::npos) continue;
      const auto last = raw.find_last_not_of(" \t\r");
      line = raw.substr(first, last - first + 1);
      return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view tok, T& value) {
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  if constexpr (std::is_floating_point_v<T>) {
    // strtod accepts the exponent and sign forms found in the wild.
    std::string buf(tok);
    char* stop = nullptr;
    value = std::strtod(buf.c_str(), &stop);
    return stop == buf.c_str() + buf.size() && std::isfinite(value);
  } else {
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
  }
}

}  // namespace

TriangleMesh parse_off(std::string_view text) {
  OffLines lines(text);
  std::string_view line;
  if (!lines.next(line)) throw ParseError(0, "empty input: missing OFF header");
  if (line.substr(0, 3) != "OFF") throw ParseError(lines.line_no(), "missing OFF header");

  std::string_view counts_line = line.substr(3);
  if (counts_line.find_first_not_of(" \t\r") == std::string_view::npos) {
    if (!lines.next(counts_line)) throw ParseError(0, "missing vertex/face counts");
  }
  const auto counts = tokens(counts_line);
  long long nv = 0, nf = 0;
  if (counts.size() < 2 || !parse_number(counts[0], nv) || !parse_number(counts[1], nf) || nv < 0 || nf < 0) {
    throw ParseError(lines.line_no(), "malformed vertex/face counts");
  }

  TriangleMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long long v = 0; v < nv; ++v) {
    if (!lines.next(line)) {
      throw ParseError(0, "vertex section truncated: expected " + std::to_string(nv) + " vertices, found " +
                              std::to_string(v));
    }
    const auto tok = tokens(line);
    if (tok.size() < 3) throw ParseError(lines.line_no(), "vertex needs 3 coordinates");
    for (int c = 0; c < 3; ++c) {
      double x = 0.0;
      if (!parse_number(tok[static_cast<std::size_t>(c)], x)) throw ParseError(lines.line_no(), "malformed vertex coordinate");
      mesh.vertices(v, c) = x;
    }
  }

  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long long f = 0; f < nf; ++f) {
    if (!lines.next(line)) {
      throw ParseError(0, "face section truncated: expected " + std::to_string(nf) + " faces, found " +
                              std::to_string(f));
    }
    const auto tok = tokens(line);
    long long arity = 0;
    if (tok.empty() || !parse_number(tok[0], arity)) throw ParseError(lines.line_no(), "malformed face arity");
    if (arity < 3) throw ParseError(lines.line_no(), "face needs at least 3 vertices");
    if (static_cast<long long>(tok.size()) < arity + 1) throw ParseError(lines.line_no(), "face has too few indices");
    std::vector<int> idx(static_cast<std::size_t>(arity));
    for (long long k = 0; k < arity; ++k) {
      int i = 0;
      if (!parse_number(tok[static_cast<std::size_t>(k + 1)], i) || i < 0 || i >= nv) {
        throw ParseError(lines.line_no(), "face index out of range");
      }
      idx[static_cast<std::size_t>(k)] = i;
    }
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
  }
  return mesh;
}

TriangleMesh read_off_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_off(buf.str());
}

PointCloud sample_mesh_surface(const TriangleMesh& mesh, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample count must be positive");
  const auto areas = mesh.face_areas();
  std::vector<double> cumulative(areas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    total += areas[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("mesh has no positive-area faces");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud;
  cloud.provenance = Provenance::MeshSample;
  cloud.intrinsic_dim = 2;
  cloud.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const double s = std::sqrt(unit(rng));
    const double r = unit(rng);
    cloud.points.row(i) = (1.0 - s) * mesh.vertices.row(f[0]) + s * (1.0 - r) * mesh.vertices.row(f[1]) +
                          s * r * mesh.vertices.row(f[2]);
  }
  return cloud;
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  PointCloud out = cloud;
  const Eigen::RowVectorXd centroid = cloud.points.colwise().mean();
  out.points.rowwise() -= centroid;
  const double radius = out.points.rowwise().norm().maxCoeff();
  if (!(radius > 0.0)) throw InvalidArgument("degenerate point cloud: all points coincide");
  out.points /= radius;
  return out;
}

}  // namespace mgnn
