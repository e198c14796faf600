#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/point_cloud.hpp"

namespace mgnn {

struct TriangleMesh {
  /// V x 3.
  Eigen::MatrixXd vertices;
  std::vector<std::array<int, 3>> faces;

  /// Per-face areas, aligned with faces.
  std::vector<double> face_areas() const;
  double total_area() const;
};

/// Parses an OFF mesh. Accepts '#' comments, blank lines, the header either on
/// its own line or followed by the counts ("OFF V F E", also "OFFV F E"), and
/// fan-triangulates polygons with more than three vertices. Throws ParseError
/// carrying the offending line number.
TriangleMesh parse_off(std::string_view text);
TriangleMesh read_off_file(const std::filesystem::path& path);

/// n points: area-weighted face choice, then uniform barycentric coordinates.
/// Throws InvalidArgument for meshes without positive area.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, Eigen::Index n, std::uint64_t seed);

/// Centroid to the origin, then scale so the farthest point has norm 1.
/// Throws InvalidArgument if all points coincide.
PointCloud normalize_cloud(const PointCloud& cloud);

}  // namespace mgnn
