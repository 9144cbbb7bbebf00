#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "occkit/align.hpp"
#include "occkit/gmm.hpp"
#include "occkit/grid.hpp"
#include "occkit/tracking.hpp"

namespace occkit {

struct OverlapCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
  // Empty union counts as perfect agreement.
  double iou() const {
    return union_ == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(union_);
  }
};

double iou_geo(const SemanticGrid& pred, const SemanticGrid& gt);
OverlapCounts occupancy_overlap(const SemanticGrid& pred, const SemanticGrid& gt);

struct MiouResult {
  double miou = 0.0;
  std::map<ClassId, double> per_class;  // classes with non-empty union only
};

// Empty `classes` means every non-free class of the taxonomy.
MiouResult miou_geo(const SemanticGrid& pred, const SemanticGrid& gt, std::span<const ClassId> classes = {});
// Per-class intersection/union counts, indexed by class id.
std::vector<OverlapCounts> class_overlap(const SemanticGrid& pred, const SemanticGrid& gt);

// Rasterises continuous points onto a lattice centred at the origin
// (nearest cell) and returns the IoU of the two occupied cell sets.
double point_set_iou(std::span<const Vec3> a, std::span<const Vec3> b, double resolution);

// IoU of fractional occupancy at resolution eps: every aligned point stands
// for its source voxel, a solid cube turned by the alignment, and each cell
// is sampled 4x4x4 times. Unlike nearest-cell snapping this has no holes
// when the source lattice ends up rotated.
double aligned_shape_iou(const AlignedShape& a, const AlignedShape& b, double resolution);

struct ShapeConsistency {
  std::vector<double> pair_iou;  // one per consecutive frame pair
  double mean = 1.0;
  std::size_t degenerate_frames = 0;  // frames whose PCA used fallback axes
};

ShapeConsistency shape_consistency(std::span<const AlignedShape> aligned, double resolution);

// Aligns each frame of a track (voxel sets in meters) and scores it.
ShapeConsistency track_shape_consistency(std::span<const std::vector<Vec3>> frames, double resolution);

struct BackgroundConsistency {
  double iou = 1.0;
  std::size_t projected = 0;   // distinct projected voxels inside frame t+1
  std::size_t observed = 0;    // frame t+1 static voxels inside the overlap region
  std::size_t intersection = 0;
};

// Static voxels of frame t moved into frame t+1 with ego motion; IoU against
// frame t+1 static voxels inside the region visible from both frames.
BackgroundConsistency background_consistency(const SemanticGrid& grid_t, const SemanticGrid& grid_t1,
                                             const Pose& ego_t, const Pose& ego_t1,
                                             const std::set<ClassId>& static_classes);

struct DimensionScore {
  ClassId category = 0;
  double mean_probability = 0.0;
  double pass_rate = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  std::optional<double> iou_geo;
  std::optional<double> miou_geo;
  std::map<ClassId, double> per_class_iou;
  std::map<ClassId, double> iou_object;  // mean shape consistency per category
  std::optional<double> iou_bg;
  std::map<ClassId, DimensionScore> dimension;
  double rho = kDefaultRho;

  // `key = value` lines.
  std::string to_text(const LabelTaxonomy& taxonomy) const;
  // One JSON object.
  std::string to_json(const LabelTaxonomy& taxonomy) const;
};

}  // namespace occkit
