#include "occkit/reference.hpp"

#include "occkit/error.hpp"

namespace occkit::reference {

FovMask fov_mask(const GridSpec& spec, std::span<const CameraModel> cameras) {
  if (cameras.empty()) throw Error(ErrorCode::EmptyInput, "fov_mask needs at least one camera");
  FovMask mask{spec, std::vector<std::uint8_t>(spec.voxel_count(), 0)};
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Vec3 c = voxel_to_ego(spec, spec.unravel(i));
    for (const auto& cam : cameras) {
      if (cam.sees(c)) {
        mask.data[i] = 1;
        break;
      }
    }
  }
  return mask;
}

FlowField static_flow(const FramePair& pair) {
  const LabelTaxonomy& tax = taxonomy_of(pair.grid_t);
  const GridSpec& spec = pair.grid_t.spec;
  FlowField out(spec, FlowDirection::Forward, pair.grid_t.timestamp);
  const Pose rel = pair.ego_t1.inverse() * pair.ego_t;
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    if (!tax.is_static(pair.grid_t.data[i])) continue;
    const Vec3 c = voxel_to_ego(spec, spec.unravel(i));
    out.set(i, rel.apply(c) - c);
  }
  return out;
}

FlowField dynamic_flow(const FramePair& pair, FlowStats* stats) {
  const LabelTaxonomy& tax = taxonomy_of(pair.grid_t);
  const GridSpec& spec = pair.grid_t.spec;
  FlowField out(spec, FlowDirection::Forward, pair.grid_t.timestamp);
  const double margin = 0.5 * spec.resolution;
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    if (!tax.is_dynamic(pair.grid_t.data[i])) continue;
    const Vec3 c = voxel_to_ego(spec, spec.unravel(i));
    const int k = attribute_point(c, pair.annotations_t, margin);
    if (k < 0) {
      if (stats) ++stats->unattributed;
      continue;
    }
    const ObjectAnnotation& a0 = pair.annotations_t[k];
    const ObjectAnnotation* a1 = nullptr;
    for (const auto& a : pair.annotations_t1) {
      if (a.agent_id == a0.agent_id) a1 = &a;
    }
    if (!a1) {
      if (stats) ++stats->vanished;
      continue;
    }
    const Vec3 local = a0.agent_to_ego.inverse().apply(c);
    out.set(i, a1->agent_to_ego.apply(local) - c);
  }
  return out;
}

OverlapCounts occupancy_overlap(const SemanticGrid& pred, const SemanticGrid& gt) {
  if (!(pred.spec == gt.spec)) throw Error(ErrorCode::SpecMismatch, "grids have different specs");
  const ClassId fp = taxonomy_of(pred).free_id;
  const ClassId fg = taxonomy_of(gt).free_id;
  OverlapCounts out;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool a = pred.data[i] != fp;
    const bool b = gt.data[i] != fg;
    if (a && b) ++out.intersection;
    if (a || b) ++out.union_;
  }
  return out;
}

std::vector<OverlapCounts> class_overlap(const SemanticGrid& pred, const SemanticGrid& gt) {
  if (!(pred.spec == gt.spec)) throw Error(ErrorCode::SpecMismatch, "grids have different specs");
  std::vector<OverlapCounts> out(256);
  for (int c = 0; c < 256; ++c) {
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      const bool a = pred.data[i] == c;
      const bool b = gt.data[i] == c;
      if (a && b) ++out[c].intersection;
      if (a || b) ++out[c].union_;
    }
  }
  return out;
}

BackgroundConsistency background_consistency(const SemanticGrid& grid_t, const SemanticGrid& grid_t1,
                                             const Pose& ego_t, const Pose& ego_t1,
                                             const std::set<ClassId>& static_classes) {
  const GridSpec& spec = grid_t.spec;
  const Pose forward = ego_t1.inverse() * ego_t;
  std::set<std::size_t> projected;
  std::set<std::size_t> observed;
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Vec3 c = voxel_to_ego(spec, spec.unravel(i));
    if (static_classes.contains(grid_t.data[i])) {
      if (auto v = ego_to_voxel(spec, forward.apply(c))) projected.insert(spec.linear(*v));
    }
    if (static_classes.contains(grid_t1.data[i]) && ego_to_voxel(spec, forward.inverse().apply(c))) {
      observed.insert(i);
    }
  }
  std::size_t inter = 0;
  for (auto i : projected) inter += observed.count(i);
  const std::size_t uni = projected.size() + observed.size() - inter;
  BackgroundConsistency out;
  out.projected = projected.size();
  out.observed = observed.size();
  out.intersection = inter;
  out.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  return out;
}

RenderedFrame render_frame(const ScenarioScript& script, int t) {
  const GridSpec& spec = script.spec;
  const LabelTaxonomy& tax = builtin_taxonomy(script.taxonomy);
  RenderedFrame fr;
  fr.ego = script.ego_trajectory[t];
  fr.grid = SemanticGrid(spec, script.taxonomy, tax.free_id);
  fr.grid.timestamp = t;
  fr.owner.assign(spec.voxel_count(), -1);
  const Pose world_to_ego = fr.ego.inverse();
  std::vector<ObjectAnnotation> boxes;
  for (const auto& a : script.agents) {
    boxes.push_back({world_to_ego * a.motion.pose_at(t), a.size, a.category, a.agent_id});
  }
  std::vector<std::size_t> owned(boxes.size(), 0);
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Vec3 c = voxel_to_ego(spec, spec.unravel(i));
    const Vec3 w = fr.ego.apply(c);
    for (const auto& p : script.static_props) {
      if ((w.array() >= p.min.array()).all() && (w.array() <= p.max.array()).all()) fr.grid.data[i] = p.category;
    }
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      if (!boxes[k].contains(c)) continue;
      fr.grid.data[i] = boxes[k].category;
      fr.owner[i] = static_cast<std::int32_t>(k);
    }
    if (fr.owner[i] >= 0) ++owned[fr.owner[i]];
  }
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (owned[k] > 0) fr.annotations.push_back(boxes[k]);
  }
  return fr;
}

}  // namespace occkit::reference
