#include "mgnn/point_cloud.hpp"

#include "mgnn/errors.hpp"

namespace mgnn {

void PointCloud::validate() const {
  if (points.rows() < 2) throw InvalidArgument("point cloud needs at least 2 points");
  if (points.cols() < 1) throw InvalidArgument("point cloud has no coordinates");
  if (!points.allFinite()) throw InvalidArgument("point cloud has non-finite coordinates");
}

}  // namespace mgnn
