#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "occkit/flow.hpp"
#include "occkit/objects.hpp"

namespace occkit {

struct TrackPoint {
  std::int64_t timestamp = 0;
  int object_id = 0;
  Vec3 centroid = Vec3::Zero();  // meters, ego frame
  OrientedBox box;
  bool operator==(const TrackPoint&) const = default;
};

struct Track {
  std::int64_t track_id = 0;
  ClassId category = 0;
  std::vector<TrackPoint> frames;  // strictly increasing timestamps
  bool operator==(const Track&) const = default;
};

struct Match {
  int pred = 0;
  int obs = 0;
  double cost = 0.0;
};

struct AssignmentResult {
  std::vector<Match> matches;  // sorted by pred index
  std::vector<int> unmatched_t;
  std::vector<int> unmatched_t1;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> matrix;  // rows x cols, 1 where matched

  double total_cost() const;
};

struct Propagation {
  std::vector<Vec3> positions;  // meters
  std::size_t skipped = 0;      // voxels without valid flow
};

// Voxel centres advanced by their flow vectors. Throws EmptyAfterFiltering
// when no voxel carries valid flow.
Propagation propagate(std::span<const VoxelIndex> voxels, const FlowField& flow);

// Arithmetic mean; throws EmptyInput.
Vec3 centroid(std::span<const Vec3> positions);
Vec3 voxel_centroid(std::span<const VoxelIndex> voxels, const GridSpec& spec);

// Minimum-cost assignment on a dense row-major rows x cols matrix. Every row
// (if rows <= cols) or every column (otherwise) is assigned. Returns the
// column of each row, -1 where unassigned.
std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols);

// Optimal gated bipartite matching over Euclidean centroid distances: among
// pairs with distance <= max_dist, minimises sum(distance - max_dist) over the
// chosen pairs. With an infinite gate every row or column is matched and the
// plain total distance is minimised.
AssignmentResult associate(std::span<const Vec3> pred, std::span<const Vec3> obs,
                           double max_dist = std::numeric_limits<double>::infinity());

struct TrackingFrame {
  std::int64_t timestamp = 0;
  std::vector<ObjectInstance> instances;
  // Forward flow from this frame to the next; nullptr means zero motion.
  const FlowField* flow = nullptr;
};

struct TrackerOptions {
  double max_dist = 3.0;
};

std::vector<Track> track_sequence(std::span<const TrackingFrame> frames, const GridSpec& spec,
                                  const TrackerOptions& options = {});

}  // namespace occkit
