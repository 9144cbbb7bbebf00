#include "occkit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "occkit/error.hpp"
#include "occkit/parallel.hpp"

namespace occkit {

void GridSpec::validate() const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw Error(ErrorCode::InvariantViolation, "grid dims must be >= 1");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::InvariantViolation, "grid resolution must be positive");
  }
  if (!origin_offset.allFinite()) throw Error(ErrorCode::InvariantViolation, "grid origin must be finite");
}

Vec3 voxel_to_ego(const GridSpec& spec, const VoxelIndex& v) {
  return spec.origin_offset + spec.resolution * Vec3(v.x + 0.5, v.y + 0.5, v.z + 0.5);
}

VoxelIndex ego_to_voxel_unchecked(const GridSpec& spec, const Vec3& p) {
  const Vec3 q = (p - spec.origin_offset) / spec.resolution;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

std::optional<VoxelIndex> ego_to_voxel(const GridSpec& spec, const Vec3& p) {
  const Vec3 q = (p - spec.origin_offset) / spec.resolution;
  if (!q.allFinite()) return std::nullopt;
  for (int a = 0; a < 3; ++a) {
    if (q[a] < 0.0 || q[a] >= static_cast<double>(spec.dims[a])) return std::nullopt;
  }
  const VoxelIndex v{static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                     static_cast<int>(std::floor(q.z()))};
  if (!spec.in_bounds(v)) return std::nullopt;
  return v;
}

SemanticGrid::SemanticGrid(const GridSpec& s, std::string tax, ClassId fill)
    : spec(s), taxonomy(std::move(tax)), data(s.voxel_count(), fill) {}

void SemanticGrid::validate(const LabelTaxonomy& tax) const {
  spec.validate();
  if (data.size() != spec.voxel_count()) {
    throw Error(ErrorCode::InvariantViolation, "grid data size does not match spec");
  }
  bool known[256] = {};
  for (const auto& c : tax.classes) known[c.id] = true;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!known[data[i]]) {
      throw Error(ErrorCode::InvariantViolation, "voxel " + std::to_string(i) + " holds id " +
                                                     std::to_string(data[i]) + " not in taxonomy " + tax.name);
    }
  }
}

const LabelTaxonomy& taxonomy_of(const SemanticGrid& grid) { return builtin_taxonomy(grid.taxonomy); }

std::size_t FovMask::visible_count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

CameraModel CameraModel::from_focal(double fx, double fy, int width, int height, const Pose& extrinsic) {
  CameraModel cam;
  cam.intrinsics << fx, 0.0, width / 2.0, 0.0, fy, height / 2.0, 0.0, 0.0, 1.0;
  cam.extrinsic = extrinsic;
  cam.image_size = {width, height};
  return cam;
}

CameraModel CameraModel::looking_along(double forward_yaw, double horizontal_fov, int width, int height,
                                       const Vec3& position) {
  const double c = std::cos(forward_yaw);
  const double s = std::sin(forward_yaw);
  Mat3 r;
  // Columns: optical x (right), y (down), z (forward) expressed in ego axes.
  r.col(0) = Vec3(s, -c, 0.0);
  r.col(1) = Vec3(0.0, 0.0, -1.0);
  r.col(2) = Vec3(c, s, 0.0);
  const double f = (width / 2.0) / std::tan(horizontal_fov / 2.0);
  return from_focal(f, f, width, height, Pose(r, position));
}

void CameraModel::validate() const {
  extrinsic.validate("camera extrinsic");
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "camera focal lengths must be positive");
  }
  if (image_size[0] < 1 || image_size[1] < 1) {
    throw Error(ErrorCode::InvariantViolation, "camera image size must be >= 1");
  }
}

CameraModel::Projection CameraModel::project(const Vec3& ego_point) const {
  const Vec3 p = extrinsic.inverse().apply(ego_point);
  const Vec3 h = intrinsics * p;
  return {h.x() / p.z(), h.y() / p.z(), p.z()};
}

bool CameraModel::sees(const Vec3& ego_point) const {
  const auto pr = project(ego_point);
  return pr.depth > 0.0 && pr.u >= 0.0 && pr.u < image_size[0] && pr.v >= 0.0 && pr.v < image_size[1];
}

void ObjectAnnotation::validate() const {
  agent_to_ego.validate("agent_to_ego");
  if (!(size.length > 0.0 && size.width > 0.0 && size.height > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "annotation size components must be positive");
  }
}

bool ObjectAnnotation::contains(const Vec3& ego_point, double margin) const {
  const Vec3 local = agent_to_ego.rotation().transpose() * (ego_point - agent_to_ego.translation());
  constexpr double kSlack = 1e-9;
  return std::abs(local.x()) <= size.length / 2.0 + margin + kSlack &&
         std::abs(local.y()) <= size.width / 2.0 + margin + kSlack &&
         std::abs(local.z()) <= size.height / 2.0 + margin + kSlack;
}

SemanticGrid remap_labels(const SemanticGrid& grid, const LabelTaxonomy& target, const LabelMap& mapping) {
  const LabelTaxonomy& source = taxonomy_of(grid);
  std::array<int, 256> table;
  table.fill(-1);
  for (const auto& [src, dst] : mapping.entries) {
    if (src < 0 || src > 255) continue;
    if (!target.contains(dst)) {
      throw Error(ErrorCode::UnknownLabel, "mapping target id " + std::to_string(dst) + " not in " + target.name);
    }
    table[src] = dst;
  }
  // Emptiness is preserved regardless of what the file says about free.
  table[source.free_id] = target.free_id;

  SemanticGrid out = grid;
  out.taxonomy = target.name;
  for (std::size_t i = 0; i < grid.data.size(); ++i) {
    const int mapped = table[grid.data[i]];
    if (mapped < 0) {
      throw Error(ErrorCode::UnknownLabel, "source id " + std::to_string(grid.data[i]) + " at voxel " +
                                               std::to_string(i) + " has no mapping");
    }
    out.data[i] = static_cast<ClassId>(mapped);
  }
  return out;
}

std::vector<ClassId> collapse_2d(const SemanticGrid& grid, const LabelTaxonomy& taxonomy) {
  // rank 0 = free / lowest
  std::array<int, 256> rank{};
  const int n = static_cast<int>(taxonomy.priority_order.size());
  for (int i = 0; i < n; ++i) rank[taxonomy.priority_order[i]] = n - i;
  rank[taxonomy.free_id] = 0;

  const auto& d = grid.spec.dims;
  std::vector<ClassId> out(static_cast<std::size_t>(d[0]) * d[1], taxonomy.free_id);
  for (int x = 0; x < d[0]; ++x) {
    for (int y = 0; y < d[1]; ++y) {
      const std::size_t base = grid.spec.linear({x, y, 0});
      ClassId best = taxonomy.free_id;
      for (int z = 0; z < d[2]; ++z) {
        const ClassId c = grid.data[base + z];
        if (rank[c] > rank[best]) best = c;
      }
      out[static_cast<std::size_t>(x) * d[1] + y] = best;
    }
  }
  return out;
}

std::vector<ClassId> collapse_2d(const SemanticGrid& grid) { return collapse_2d(grid, taxonomy_of(grid)); }

FovMask fov_mask(const GridSpec& spec, std::span<const CameraModel> cameras) {
  if (cameras.empty()) throw Error(ErrorCode::EmptyInput, "fov_mask needs at least one camera");
  for (const auto& cam : cameras) cam.validate();

  // Ego -> pixel-homogeneous maps, precomputed once per camera.
  struct Projector {
    Pose ego_to_cam;
    Mat3 k;
    double w, h;
  };
  std::vector<Projector> proj;
  for (const auto& cam : cameras) {
    proj.push_back({cam.extrinsic.inverse(), cam.intrinsics, static_cast<double>(cam.image_size[0]),
                    static_cast<double>(cam.image_size[1])});
  }

  FovMask mask{spec, std::vector<std::uint8_t>(spec.voxel_count(), 0)};
  const int lx = spec.dims[0];
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int x = 0; x < lx; ++x) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int z = 0; z < spec.dims[2]; ++z) {
        const Vec3 c = voxel_to_ego(spec, {x, y, z});
        std::uint8_t seen = 0;
        for (const auto& p : proj) {
          const Vec3 h = p.k * p.ego_to_cam.apply(c);
          if (!(h.z() > 0.0)) continue;
          const double u = h.x() / h.z();
          const double v = h.y() / h.z();
          if (u >= 0.0 && u < p.w && v >= 0.0 && v < p.h) {
            seen = 1;
            break;
          }
        }
        mask.data[spec.linear({x, y, z})] = seen;
      }
    }
  }
  return mask;
}

}  // namespace occkit
