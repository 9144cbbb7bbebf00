#include "occkit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "occkit/error.hpp"
#include "occkit/parallel.hpp"

namespace occkit {

FlowField::FlowField(const GridSpec& s, FlowDirection dir, std::int64_t ts)
    : spec(s), direction(dir), timestamp(ts), data(3 * s.voxel_count(), 0.0), validity(s.voxel_count(), 0) {}

std::size_t FlowField::valid_count() const {
  return static_cast<std::size_t>(std::count(validity.begin(), validity.end(), std::uint8_t{1}));
}

void FlowField::validate() const {
  const std::size_t n = spec.voxel_count();
  if (data.size() != 3 * n || validity.size() != n) {
    throw Error(ErrorCode::InvariantViolation, "flow field size does not match spec");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (validity[i] > 1) throw Error(ErrorCode::InvariantViolation, "flow validity must be 0 or 1");
    for (int a = 0; a < 3; ++a) {
      const double v = data[3 * i + a];
      if (!std::isfinite(v)) throw Error(ErrorCode::InvariantViolation, "non-finite flow at voxel " + std::to_string(i));
      if (!validity[i] && v != 0.0) {
        throw Error(ErrorCode::InvariantViolation, "invalid flow voxel " + std::to_string(i) + " is not zero");
      }
    }
  }
  if (frame == FlowFrame::Agent && !reference) {
    throw Error(ErrorCode::InvariantViolation, "agent-centric flow without reference pose");
  }
}

namespace {

void check_pair(const FramePair& pair) {
  if (!(pair.grid_t.spec == pair.grid_t1.spec)) {
    throw Error(ErrorCode::SpecMismatch, "frame pair grids have different specs");
  }
  if (pair.grid_t.taxonomy != pair.grid_t1.taxonomy) {
    throw Error(ErrorCode::SpecMismatch, "frame pair grids have different taxonomies");
  }
  pair.ego_t.validate("ego_t");
  pair.ego_t1.validate("ego_t1");
}

// Background flow of `grid` whose ego pose is `from`, towards ego pose `to`.
FlowField static_flow_between(const SemanticGrid& grid, const Pose& from, const Pose& to,
                              const LabelTaxonomy& tax, FlowDirection dir) {
  FlowField out(grid.spec, dir, grid.timestamp);
  const Pose rel = to.inverse() * from;
  std::array<std::uint8_t, 256> is_static{};
  for (const auto& c : tax.classes) is_static[c.id] = tax.is_static(c.id) ? 1 : 0;

  const GridSpec& spec = grid.spec;
  const int lx = spec.dims[0];
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int x = 0; x < lx; ++x) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int z = 0; z < spec.dims[2]; ++z) {
        const std::size_t i = spec.linear({x, y, z});
        if (!is_static[grid.data[i]]) continue;
        const Vec3 c = voxel_to_ego(spec, {x, y, z});
        out.set(i, rel.apply(c) - c);
      }
    }
  }
  return out;
}

FlowField dynamic_flow_between(const SemanticGrid& grid, const std::vector<ObjectAnnotation>& from,
                               const std::vector<ObjectAnnotation>& to, const LabelTaxonomy& tax,
                               FlowDirection dir, FlowStats* stats) {
  FlowField out(grid.spec, dir, grid.timestamp);
  for (const auto& a : from) a.validate();
  for (const auto& a : to) a.validate();

  // Per source annotation: the motion (to_pose * from_pose^-1), or none.
  std::unordered_map<std::int64_t, const ObjectAnnotation*> target_by_id;
  for (const auto& a : to) target_by_id.emplace(a.agent_id, &a);
  std::vector<std::optional<Pose>> motion(from.size());
  for (std::size_t k = 0; k < from.size(); ++k) {
    if (auto it = target_by_id.find(from[k].agent_id); it != target_by_id.end()) {
      motion[k] = it->second->agent_to_ego * from[k].agent_to_ego.inverse();
    }
  }

  std::array<std::uint8_t, 256> is_dynamic{};
  for (ClassId d : tax.dynamic_ids) is_dynamic[d] = 1;

  const GridSpec& spec = grid.spec;
  const double margin = 0.5 * spec.resolution;
  std::size_t unattributed = 0;
  std::size_t vanished = 0;
  const int lx = spec.dims[0];
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : unattributed, vanished) num_threads(worker_count())
  for (int x = 0; x < lx; ++x) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int z = 0; z < spec.dims[2]; ++z) {
        const std::size_t i = spec.linear({x, y, z});
        if (!is_dynamic[grid.data[i]]) continue;
        const Vec3 c = voxel_to_ego(spec, {x, y, z});
        const int k = attribute_point(c, from, margin);
        if (k < 0) {
          ++unattributed;
          continue;
        }
        if (!motion[k]) {
          ++vanished;
          continue;
        }
        out.set(i, motion[k]->apply(c) - c);
      }
    }
  }
  if (stats) {
    stats->unattributed += unattributed;
    stats->vanished += vanished;
  }
  return out;
}

FramePair swapped(const FramePair& p) {
  return {p.grid_t1, p.grid_t, p.ego_t1, p.ego_t, p.annotations_t1, p.annotations_t};
}

}  // namespace

int attribute_point(const Vec3& ego_point, const std::vector<ObjectAnnotation>& annotations, double margin) {
  int best = -1;
  double best_volume = 0.0;
  for (std::size_t k = 0; k < annotations.size(); ++k) {
    const auto& a = annotations[k];
    if (!a.contains(ego_point, margin)) continue;
    const double v = a.volume();
    if (best < 0 || v < best_volume) {
      best = static_cast<int>(k);
      best_volume = v;
    }
  }
  return best;
}

FlowField static_flow(const FramePair& pair, const LabelTaxonomy& taxonomy) {
  check_pair(pair);
  return static_flow_between(pair.grid_t, pair.ego_t, pair.ego_t1, taxonomy, FlowDirection::Forward);
}

FlowField static_flow(const FramePair& pair) { return static_flow(pair, taxonomy_of(pair.grid_t)); }

FlowField dynamic_flow(const FramePair& pair, const LabelTaxonomy& taxonomy, FlowStats* stats) {
  check_pair(pair);
  return dynamic_flow_between(pair.grid_t, pair.annotations_t, pair.annotations_t1, taxonomy,
                              FlowDirection::Forward, stats);
}

FlowField dynamic_flow(const FramePair& pair, FlowStats* stats) {
  return dynamic_flow(pair, taxonomy_of(pair.grid_t), stats);
}

FlowField merge_flows(const FlowField& static_part, const FlowField& dynamic_part) {
  if (!(static_part.spec == dynamic_part.spec)) throw Error(ErrorCode::SpecMismatch, "flow specs differ");
  if (static_part.direction != dynamic_part.direction) {
    throw Error(ErrorCode::SpecMismatch, "flow directions differ");
  }
  FlowField out = static_part;
  for (std::size_t i = 0; i < dynamic_part.validity.size(); ++i) {
    if (dynamic_part.valid(i)) out.set(i, dynamic_part.at(i));
  }
  return out;
}

FlowField forward_flow(const FramePair& pair, FlowStats* stats) {
  const LabelTaxonomy& tax = taxonomy_of(pair.grid_t);
  return merge_flows(static_flow(pair, tax), dynamic_flow(pair, tax, stats));
}

FlowField backward_flow(const FramePair& pair, FlowStats* stats) {
  check_pair(pair);
  const LabelTaxonomy& tax = taxonomy_of(pair.grid_t1);
  const FramePair rev = swapped(pair);
  FlowField s = static_flow_between(rev.grid_t, rev.ego_t, rev.ego_t1, tax, FlowDirection::Backward);
  FlowField d = dynamic_flow_between(rev.grid_t, rev.annotations_t, rev.annotations_t1, tax,
                                     FlowDirection::Backward, stats);
  return merge_flows(s, d);
}

FlowField to_agent_centric(const FlowField& flow, const ObjectAnnotation& agent) {
  agent.agent_to_ego.validate("agent pose");
  FlowField out = flow;
  const Mat3 rt = agent.agent_to_ego.rotation().transpose();
  for (std::size_t i = 0; i < flow.validity.size(); ++i) {
    if (flow.valid(i)) out.set(i, rt * flow.at(i));
  }
  out.frame = FlowFrame::Agent;
  out.reference = agent.agent_to_ego;
  return out;
}

Vec3 agent_position(const GridSpec& spec, const VoxelIndex& v, const ObjectAnnotation& agent) {
  return agent.agent_to_ego.inverse().apply(voxel_to_ego(spec, v));
}

}  // namespace occkit
