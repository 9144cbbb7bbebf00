#include "occkit/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "occkit/error.hpp"
#include "occkit/parallel.hpp"

namespace occkit {

Pose MotionModel::pose_at(int t) const {
  switch (kind) {
    case MotionKind::Static:
      return initial;
    case MotionKind::ConstantVelocity:
      return {initial.rotation(), initial.translation() + velocity * static_cast<double>(t)};
    case MotionKind::ConstantTurnRate: {
      const double yaw0 = initial.yaw();
      const Vec3& p0 = initial.translation();
      Vec3 p = p0;
      if (std::abs(yaw_rate) < 1e-12) {
        p += speed * t * Vec3(std::cos(yaw0), std::sin(yaw0), 0.0);
      } else {
        const double r = speed / yaw_rate;
        const double yaw = yaw0 + yaw_rate * t;
        p.x() += r * (std::sin(yaw) - std::sin(yaw0));
        p.y() -= r * (std::cos(yaw) - std::cos(yaw0));
      }
      return Pose(Pose::from_yaw(yaw_rate * t).rotation() * initial.rotation(), p);
    }
    case MotionKind::Explicit:
      if (t < 0 || t >= static_cast<int>(poses.size())) {
        throw Error(ErrorCode::InvariantViolation, "explicit motion has no pose for frame " + std::to_string(t));
      }
      return poses[t];
  }
  return initial;
}

void ScenarioScript::validate() const {
  spec.validate();
  if (duration < 1) throw Error(ErrorCode::InvariantViolation, "scenario duration must be >= 1");
  if (static_cast<int>(ego_trajectory.size()) != duration) {
    throw Error(ErrorCode::InvariantViolation, "ego trajectory length must equal duration");
  }
  for (const auto& p : ego_trajectory) p.validate("ego pose");
  const LabelTaxonomy& tax = builtin_taxonomy(taxonomy);
  for (const auto& a : agents) {
    if (!tax.is_dynamic(a.category)) {
      throw Error(ErrorCode::InvariantViolation, "agent " + std::to_string(a.agent_id) + " has a non-dynamic category");
    }
    if (!(a.size.length > 0 && a.size.width > 0 && a.size.height > 0)) {
      throw Error(ErrorCode::InvariantViolation, "agent sizes must be positive");
    }
    if (a.motion.kind == MotionKind::Explicit && static_cast<int>(a.motion.poses.size()) != duration) {
      throw Error(ErrorCode::InvariantViolation, "explicit agent poses must cover the duration");
    }
    for (int t = 0; t < duration; ++t) a.motion.pose_at(t).validate("agent pose");
  }
  for (const auto& p : static_props) {
    if (!tax.contains(p.category) || p.category == tax.free_id) {
      throw Error(ErrorCode::InvariantViolation, "static prop has an invalid class");
    }
  }
}

namespace {

// Ego-frame annotation of every agent at frame t.
std::vector<ObjectAnnotation> agent_boxes(const ScenarioScript& s, int t) {
  const Pose world_to_ego = s.ego_trajectory[t].inverse();
  std::vector<ObjectAnnotation> out;
  for (const auto& a : s.agents) out.push_back({world_to_ego * a.motion.pose_at(t), a.size, a.category, a.agent_id});
  return out;
}

}  // namespace

RenderedFrame render_frame(const ScenarioScript& script, int t) {
  if (t < 0 || t >= script.duration) throw Error(ErrorCode::InvariantViolation, "frame index out of range");
  const GridSpec& spec = script.spec;
  const LabelTaxonomy& tax = builtin_taxonomy(script.taxonomy);
  RenderedFrame fr;
  fr.ego = script.ego_trajectory[t];
  fr.grid = SemanticGrid(spec, script.taxonomy, tax.free_id);
  fr.grid.timestamp = t;
  fr.owner.assign(spec.voxel_count(), -1);

  const int lx = spec.dims[0];
  if (!script.static_props.empty()) {
    const Pose ego = fr.ego;
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (int x = 0; x < lx; ++x) {
      for (int y = 0; y < spec.dims[1]; ++y) {
        for (int z = 0; z < spec.dims[2]; ++z) {
          const Vec3 w = ego.apply(voxel_to_ego(spec, {x, y, z}));
          for (const auto& p : script.static_props) {
            if ((w.array() >= p.min.array()).all() && (w.array() <= p.max.array()).all()) {
              fr.grid.data[spec.linear({x, y, z})] = p.category;
            }
          }
        }
      }
    }
  }

  const std::vector<ObjectAnnotation> boxes = agent_boxes(script, t);
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const ObjectAnnotation& box = boxes[k];
    // Index range covering the box's ego-frame bounding box.
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local(((c & 1) ? 0.5 : -0.5) * box.size.length, ((c & 2) ? 0.5 : -0.5) * box.size.width,
                       ((c & 4) ? 0.5 : -0.5) * box.size.height);
      const Vec3 e = box.agent_to_ego.apply(local);
      lo = lo.cwiseMin(e);
      hi = hi.cwiseMax(e);
    }
    const VoxelIndex a = ego_to_voxel_unchecked(spec, lo);
    const VoxelIndex b = ego_to_voxel_unchecked(spec, hi);
    const int x0 = std::max(a.x, 0), x1 = std::min(b.x, spec.dims[0] - 1);
    const int y0 = std::max(a.y, 0), y1 = std::min(b.y, spec.dims[1] - 1);
    const int z0 = std::max(a.z, 0), z1 = std::min(b.z, spec.dims[2] - 1);
    for (int x = x0; x <= x1; ++x) {
      for (int y = y0; y <= y1; ++y) {
        for (int z = z0; z <= z1; ++z) {
          if (!box.contains(voxel_to_ego(spec, {x, y, z}))) continue;
          const std::size_t i = spec.linear({x, y, z});
          fr.grid.data[i] = box.category;
          fr.owner[i] = static_cast<std::int32_t>(k);
        }
      }
    }
  }

  std::vector<std::size_t> owned(boxes.size(), 0);
  for (std::int32_t o : fr.owner) {
    if (o >= 0) ++owned[o];
  }
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (owned[k] > 0) fr.annotations.push_back(boxes[k]);
  }
  return fr;
}

FlowField ground_truth_flow(const ScenarioScript& script, int t, FlowDirection direction) {
  const int other = direction == FlowDirection::Forward ? t + 1 : t - 1;
  if (t < 0 || t >= script.duration || other < 0 || other >= script.duration) {
    throw Error(ErrorCode::InvariantViolation, "flow needs both frames inside the scenario");
  }
  const RenderedFrame now = render_frame(script, t);
  const RenderedFrame then = render_frame(script, other);
  const LabelTaxonomy& tax = builtin_taxonomy(script.taxonomy);
  const GridSpec& spec = script.spec;

  std::vector<char> present(script.agents.size(), 0);
  for (const auto& a : then.annotations) {
    for (std::size_t k = 0; k < script.agents.size(); ++k) {
      if (script.agents[k].agent_id == a.agent_id) present[k] = 1;
    }
  }

  FlowField flow(spec, direction, t);
  const Pose& ego_now = script.ego_trajectory[t];
  const Pose world_to_ego_then = script.ego_trajectory[other].inverse();
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const ClassId c = now.grid.data[i];
    if (c == tax.free_id) continue;
    const Vec3 x = voxel_to_ego(spec, spec.unravel(i));
    const Vec3 world = ego_now.apply(x);
    const std::int32_t k = now.owner[i];
    if (k >= 0) {
      if (!present[k]) continue;
      const MotionModel& m = script.agents[k].motion;
      const Vec3 local = m.pose_at(t).inverse().apply(world);
      flow.set(i, world_to_ego_then.apply(m.pose_at(other).apply(local)) - x);
    } else if (tax.is_static(c)) {
      flow.set(i, world_to_ego_then.apply(world) - x);
    }
  }
  return flow;
}

std::vector<Track> ground_truth_tracks(const ScenarioScript& script) {
  script.validate();
  std::vector<Track> tracks(script.agents.size());
  for (std::size_t k = 0; k < script.agents.size(); ++k) {
    tracks[k].track_id = script.agents[k].agent_id;
    tracks[k].category = script.agents[k].category;
  }
  const GridSpec& spec = script.spec;
  for (int t = 0; t < script.duration; ++t) {
    const RenderedFrame fr = render_frame(script, t);
    std::vector<Vec3> sum(script.agents.size(), Vec3::Zero());
    std::vector<std::size_t> count(script.agents.size(), 0);
    for (std::size_t i = 0; i < fr.owner.size(); ++i) {
      if (fr.owner[i] < 0) continue;
      sum[fr.owner[i]] += voxel_to_ego(spec, spec.unravel(i));
      ++count[fr.owner[i]];
    }
    for (std::size_t k = 0; k < script.agents.size(); ++k) {
      if (count[k] == 0) continue;
      const ObjectAnnotation& a = *std::find_if(fr.annotations.begin(), fr.annotations.end(),
                                                [&](const ObjectAnnotation& x) { return x.agent_id == script.agents[k].agent_id; });
      TrackPoint p;
      p.timestamp = t;
      p.centroid = sum[k] / static_cast<double>(count[k]);
      p.box.center = a.agent_to_ego.translation();
      p.box.yaw = a.agent_to_ego.yaw();
      p.box.length = a.size.length;
      p.box.width = a.size.width;
      p.box.height = a.size.height;
      tracks[k].frames.push_back(p);
    }
  }
  std::erase_if(tracks, [](const Track& tr) { return tr.frames.empty(); });
  return tracks;
}

double IdentityAgreement::agreement() const {
  const std::size_t denom = std::max(predicted_points, truth_points);
  return denom == 0 ? 1.0 : static_cast<double>(matched_points) / static_cast<double>(denom);
}

IdentityAgreement identity_agreement(const std::vector<Track>& predicted, const std::vector<Track>& truth,
                                     double tolerance) {
  IdentityAgreement out;
  std::multimap<std::int64_t, std::pair<std::int64_t, Vec3>> truth_at;
  for (const auto& tr : truth) {
    for (const auto& p : tr.frames) truth_at.emplace(p.timestamp, std::make_pair(tr.track_id, p.centroid));
    out.truth_points += tr.frames.size();
  }

  // Per predicted track: agent id of each point (or none), and the majority agent.
  struct Credit {
    std::int64_t agent = -1;
    std::size_t points = 0;
  };
  std::vector<Credit> credit(predicted.size());
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    std::map<std::int64_t, std::size_t> votes;
    for (const auto& p : predicted[k].frames) {
      ++out.predicted_points;
      auto [lo, hi] = truth_at.equal_range(p.timestamp);
      for (auto it = lo; it != hi; ++it) {
        if ((it->second.second - p.centroid).norm() <= tolerance) {
          ++votes[it->second.first];
          break;
        }
      }
    }
    for (const auto& [agent, n] : votes) {
      if (n > credit[k].points) credit[k] = {agent, n};
    }
  }
  // Each agent keeps only its best-credited predicted track.
  std::map<std::int64_t, std::size_t> best_for_agent;
  for (std::size_t k = 0; k < credit.size(); ++k) {
    if (credit[k].agent < 0) continue;
    auto [it, inserted] = best_for_agent.emplace(credit[k].agent, k);
    if (!inserted && credit[k].points > credit[it->second].points) it->second = k;
  }
  for (const auto& [agent, k] : best_for_agent) out.matched_points += credit[k].points;
  return out;
}

ScenarioScript random_scenario(std::uint64_t seed, const RandomScenarioOptions& options) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  ScenarioScript s;
  s.duration = options.duration;
  s.spec = options.spec;
  s.seed = seed;

  // Ground slab exactly one voxel layer thick at the bottom of the grid.
  const double ground_lo = s.spec.origin_offset.z();
  const double ground_hi = ground_lo + s.spec.resolution;
  s.static_props.push_back({unified::kRoad, Vec3(-1000.0, -1000.0, ground_lo), Vec3(1000.0, 1000.0, ground_hi)});

  MotionModel ego;
  if (options.moving_ego) {
    ego.kind = MotionKind::ConstantTurnRate;
    ego.speed = uni(0.3, 0.8);
    ego.yaw_rate = uni(-0.03, 0.03);
  }
  for (int t = 0; t < s.duration; ++t) s.ego_trajectory.push_back(ego.pose_at(t));

  const double half_x = 0.5 * s.spec.dims[0] * s.spec.resolution;
  const int n = options.agents;
  for (int k = 0; k < n; ++k) {
    // Lanes alternate around y = 0: +-0.5, +-1.5, ... spacings.
    const double lane = (k / 2 + 0.5) * options.lane_spacing * (k % 2 == 0 ? 1.0 : -1.0);
    ScriptedAgent a;
    a.agent_id = 100 + k;
    const double r = uni(0.0, 1.0);
    if (r < 0.6) {
      a.category = unified::kVehicle;
      a.size = {uni(3.6, 4.8), uni(1.6, 2.0), uni(1.4, 1.8)};
    } else if (r < 0.8) {
      a.category = unified::kBicycle;
      a.size = {uni(1.6, 2.0), uni(1.2, 1.4), uni(1.4, 1.7)};
    } else {
      a.category = unified::kPedestrian;
      a.size = {uni(1.2, 1.4), uni(1.2, 1.4), uni(1.6, 1.9)};
    }
    const double z = ground_hi + 0.5 * a.size.height;
    const double x = uni(-0.4 * half_x, 0.4 * half_x);
    if (coin(options.turning_fraction)) {
      a.motion.kind = MotionKind::ConstantTurnRate;
      a.motion.yaw_rate = uni(0.1, 0.25) * (coin(0.5) ? 1.0 : -1.0);
      a.motion.speed = uni(1.0, 2.0) * std::abs(a.motion.yaw_rate);
      a.motion.initial = Pose::from_yaw(uni(-std::numbers::pi, std::numbers::pi), Vec3(x, lane, z));
    } else {
      a.motion.kind = MotionKind::ConstantVelocity;
      const double heading = coin(0.5) ? 0.0 : std::numbers::pi;
      a.motion.initial = Pose::from_yaw(heading, Vec3(x, lane, z));
      a.motion.velocity = Vec3(std::cos(heading), std::sin(heading), 0.0) * uni(0.2, 1.0);
    }
    s.agents.push_back(std::move(a));
  }

  for (int b = 0; b < options.buildings; ++b) {
    // Between lanes: y = +-1, +-2, ... spacings.
    const double mid = (b / 2 + 1) * options.lane_spacing * (b % 2 == 0 ? 1.0 : -1.0);
    const double cx = uni(-0.8 * half_x, 0.8 * half_x);
    const double hx = uni(2.0, 4.0);
    const double hy = uni(1.0, 1.5);
    s.static_props.push_back({unified::kBuilding, Vec3(cx - hx, mid - hy, ground_hi),
                              Vec3(cx + hx, mid + hy, ground_hi + uni(2.0, 5.0))});
  }
  s.validate();
  return s;
}

}  // namespace occkit
