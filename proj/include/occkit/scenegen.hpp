#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occkit/flow.hpp"
#include "occkit/grid.hpp"
#include "occkit/tracking.hpp"

namespace occkit {

enum class MotionKind : std::uint8_t { Static, ConstantVelocity, ConstantTurnRate, Explicit };

/// World-frame agent motion. Time is measured in frames.
struct MotionModel {
  MotionKind kind = MotionKind::Static;
  Pose initial;                     // pose at t = 0 (yaw-only rotations for parametric kinds)
  Vec3 velocity = Vec3::Zero();     // ConstantVelocity, meters per frame
  double speed = 0.0;               // ConstantTurnRate, meters per frame along heading
  double yaw_rate = 0.0;            // ConstantTurnRate, radians per frame
  std::vector<Pose> poses;          // Explicit, one per frame

  Pose pose_at(int t) const;
};

struct ScriptedAgent {
  std::int64_t agent_id = 0;
  ClassId category = unified::kVehicle;
  Size3 size;
  MotionModel motion;  // agent -> world
};

// World-frame axis-aligned block.
struct StaticProp {
  ClassId category = unified::kRoad;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct ScenarioScript {
  int duration = 1;
  GridSpec spec;
  std::string taxonomy = "unified";
  std::vector<Pose> ego_trajectory;  // ego -> world, one per frame
  std::vector<ScriptedAgent> agents;
  std::vector<StaticProp> static_props;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RenderedFrame {
  SemanticGrid grid;
  std::vector<ObjectAnnotation> annotations;  // agents owning at least one voxel
  Pose ego;
  std::vector<std::int32_t> owner;  // agent index per voxel, -1 for background/free
};

// Centre-in-box rasterisation: props first (in order), agents overwrite.
RenderedFrame render_frame(const ScenarioScript& script, int t);

// Closed-form rigid flow of frame t towards t+1 (forward) or t-1 (backward),
// evaluated through world coordinates.
FlowField ground_truth_flow(const ScenarioScript& script, int t, FlowDirection direction = FlowDirection::Forward);

// One track per agent (track_id = agent_id) over the frames where it owns voxels.
std::vector<Track> ground_truth_tracks(const ScenarioScript& script);

struct IdentityAgreement {
  std::size_t matched_points = 0;     // predicted points on their track's agent
  std::size_t predicted_points = 0;
  std::size_t truth_points = 0;
  double agreement() const;           // matched / max(predicted, truth)
};

// Predicted points are tied to truth points by timestamp and centroid (within
// `tolerance` meters); each predicted track is credited to its majority agent,
// and each agent to at most one predicted track.
IdentityAgreement identity_agreement(const std::vector<Track>& predicted, const std::vector<Track>& truth,
                                     double tolerance = 1e-6);

struct RandomScenarioOptions {
  GridSpec spec;
  int duration = 20;
  int agents = 6;
  double turning_fraction = 0.5;
  double lane_spacing = 12.0;  // meters between agent lanes
  bool moving_ego = true;
  int buildings = 4;
};

// Seeded mix of translating and turning box agents on a ground plane with
// buildings. Each agent keeps its own lane (orbits stay within 2.5 m of
// their centre), so centroids stay at least lane_spacing - 5 m apart.
ScenarioScript random_scenario(std::uint64_t seed, const RandomScenarioOptions& options = {});

}  // namespace occkit
