#pragma once

// Serial, straightforward versions of the OpenMP kernels. They exist to pin
// the parallel code down in tests and to give the benchmarks a baseline.

#include <set>

#include "occkit/flow.hpp"
#include "occkit/grid.hpp"
#include "occkit/metrics.hpp"
#include "occkit/scenegen.hpp"

namespace occkit::reference {

FovMask fov_mask(const GridSpec& spec, std::span<const CameraModel> cameras);

FlowField static_flow(const FramePair& pair);
FlowField dynamic_flow(const FramePair& pair, FlowStats* stats = nullptr);

OverlapCounts occupancy_overlap(const SemanticGrid& pred, const SemanticGrid& gt);
std::vector<OverlapCounts> class_overlap(const SemanticGrid& pred, const SemanticGrid& gt);

BackgroundConsistency background_consistency(const SemanticGrid& grid_t, const SemanticGrid& grid_t1,
                                             const Pose& ego_t, const Pose& ego_t1,
                                             const std::set<ClassId>& static_classes);

// Every voxel tested against every prop and agent box.
RenderedFrame render_frame(const ScenarioScript& script, int t);

}  // namespace occkit::reference
