#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "occkit/grid.hpp"

namespace occkit {

using Point2 = Eigen::Vector2d;

/// Ground-parallel box. yaw in (-pi/2, pi/2], length >= width.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  double yaw = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  bool operator==(const OrientedBox&) const = default;
};

struct ObjectInstance {
  int object_id = 0;  // 1..N within a frame
  ClassId category = 0;
  std::vector<VoxelIndex> voxels;  // lexicographically sorted
  OrientedBox box;
};

/// Per-voxel component IDs (0 = not part of any requested category).
struct LabelVolume {
  GridSpec spec;
  std::vector<std::int32_t> ids;
  int count = 0;
};

struct Segmentation {
  LabelVolume labels;
  std::vector<ObjectInstance> instances;  // boxes not fitted
};

// 6-connected, same-category components over the requested classes. IDs follow
// the lexicographic order of each component's minimum voxel.
Segmentation segment(const SemanticGrid& grid, const std::set<ClassId>& categories);

// Sorted voxel list of component n; throws UnknownObjectId.
std::vector<VoxelIndex> extract_voxels(const LabelVolume& labels, int n);

// Counter-clockwise, collinear points dropped. Degenerate inputs return 1 or 2 points.
std::vector<Point2> convex_hull_2d(std::span<const Point2> points);

struct Rect2 {
  Point2 center = Point2::Zero();
  double yaw = 0.0;  // direction of the long side, (-pi/2, pi/2]
  double length = 0.0;
  double width = 0.0;
  double area() const { return length * width; }
};

// Minimum-area enclosing rectangle by rotating calipers over the hull edges.
// Fewer than three hull vertices yield the axis-aligned extent.
Rect2 min_area_rect(std::span<const Point2> points);

// Box over unit-square voxel footprints, scaled by `resolution`; the centre is
// expressed relative to `origin` (the grid's origin_offset for ego coordinates).
OrientedBox fit_box(std::span<const VoxelIndex> voxels, double resolution, const Vec3& origin = Vec3::Zero());
OrientedBox fit_box(std::span<const VoxelIndex> voxels, const GridSpec& spec);

// Convenience: segment, then fit every box in ego coordinates.
std::vector<ObjectInstance> identify_objects(const SemanticGrid& grid, const std::set<ClassId>& categories);

}  // namespace occkit
