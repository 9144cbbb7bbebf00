#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "occkit/grid.hpp"

namespace occkit {

enum class FlowDirection : std::uint8_t { Forward = 0, Backward = 1 };
enum class FlowFrame : std::uint8_t { Ego = 0, Agent = 1 };

/// Per-voxel displacement in meters. Invalid voxels hold zero vectors.
struct FlowField {
  GridSpec spec;
  FlowDirection direction = FlowDirection::Forward;
  std::int64_t timestamp = 0;
  FlowFrame frame = FlowFrame::Ego;
  // Set when frame == Agent: the agent_to_ego pose the vectors are expressed in.
  std::optional<Pose> reference;
  std::vector<double> data;  // 3 per voxel
  std::vector<std::uint8_t> validity;

  FlowField() = default;
  FlowField(const GridSpec& s, FlowDirection dir, std::int64_t ts);

  Vec3 at(std::size_t i) const { return {data[3 * i], data[3 * i + 1], data[3 * i + 2]}; }
  void set(std::size_t i, const Vec3& v) {
    data[3 * i] = v.x();
    data[3 * i + 1] = v.y();
    data[3 * i + 2] = v.z();
    validity[i] = 1;
  }
  bool valid(std::size_t i) const { return validity[i] != 0; }
  std::size_t valid_count() const;

  // Finite values, zero on invalid voxels, sizes matching the spec.
  void validate() const;
  bool operator==(const FlowField&) const = default;
};

struct FramePair {
  SemanticGrid grid_t;
  SemanticGrid grid_t1;
  Pose ego_t;   // ego -> world at t
  Pose ego_t1;  // ego -> world at t+1
  std::vector<ObjectAnnotation> annotations_t;
  std::vector<ObjectAnnotation> annotations_t1;
};

struct FlowStats {
  std::size_t unattributed = 0;  // dynamic voxels inside no annotation box
  std::size_t vanished = 0;      // attributed to an agent absent in the other frame
};

// Background motion induced by ego motion, on static-class voxels of grid_t.
FlowField static_flow(const FramePair& pair, const LabelTaxonomy& taxonomy);
FlowField static_flow(const FramePair& pair);

// Rigid per-voxel flow of annotated agents on dynamic-class voxels of grid_t.
FlowField dynamic_flow(const FramePair& pair, const LabelTaxonomy& taxonomy, FlowStats* stats = nullptr);
FlowField dynamic_flow(const FramePair& pair, FlowStats* stats = nullptr);

// Dynamic values win where both are valid; validity is the union.
FlowField merge_flows(const FlowField& static_part, const FlowField& dynamic_part);

// static + dynamic, t -> t+1, stamped at grid_t.timestamp.
FlowField forward_flow(const FramePair& pair, FlowStats* stats = nullptr);
// Same construction from t+1 back to t, stamped at grid_t1.timestamp.
FlowField backward_flow(const FramePair& pair, FlowStats* stats = nullptr);

// Index of the annotation owning an ego-frame point: the smallest-volume box
// containing it after inflating each side by `margin`; -1 if none.
int attribute_point(const Vec3& ego_point, const std::vector<ObjectAnnotation>& annotations, double margin);

// Vectors rotated into the agent's frame (R^T v). Positions of voxel centres in
// that frame are given by agent_position().
FlowField to_agent_centric(const FlowField& flow, const ObjectAnnotation& agent);
Vec3 agent_position(const GridSpec& spec, const VoxelIndex& v, const ObjectAnnotation& agent);

}  // namespace occkit
