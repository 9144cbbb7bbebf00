#include "occkit/objects.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "occkit/error.hpp"

namespace occkit {
namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double normalize_half_turn(double yaw) {
  constexpr double pi = std::numbers::pi;
  while (yaw <= -pi / 2.0) yaw += pi;
  while (yaw > pi / 2.0) yaw -= pi;
  return yaw;
}

// Long side first, yaw canonical; squares fold the yaw into (-pi/4, pi/4].
Rect2 canonical_rect(const Point2& center, const Point2& u, double extent_u, double extent_n) {
  Rect2 r;
  r.center = center;
  if (extent_u >= extent_n) {
    r.length = extent_u;
    r.width = extent_n;
    r.yaw = std::atan2(u.y(), u.x());
  } else {
    r.length = extent_n;
    r.width = extent_u;
    r.yaw = std::atan2(u.x(), -u.y());  // direction of n = (-u.y, u.x)
  }
  r.yaw = normalize_half_turn(r.yaw);
  if (std::abs(r.length - r.width) <= 1e-12 * std::max(1.0, r.length)) {
    constexpr double q = std::numbers::pi / 2.0;
    while (r.yaw <= -q / 2.0) r.yaw += q;
    while (r.yaw > q / 2.0) r.yaw -= q;
  }
  return r;
}

Rect2 axis_aligned_rect(std::span<const Point2> points) {
  Point2 lo = points.front();
  Point2 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 ext = hi - lo;
  return canonical_rect((lo + hi) / 2.0, Point2(1.0, 0.0), ext.x(), ext.y());
}

}  // namespace

Segmentation segment(const SemanticGrid& grid, const std::set<ClassId>& categories) {
  const LabelTaxonomy& tax = taxonomy_of(grid);
  std::array<bool, 256> wanted{};
  for (ClassId c : categories) {
    if (c == tax.free_id) throw Error(ErrorCode::InvariantViolation, "cannot segment the free class");
    if (!tax.contains(c)) throw Error(ErrorCode::UnknownLabel, "class " + std::to_string(c) + " not in " + tax.name);
    wanted[c] = true;
  }

  const GridSpec& spec = grid.spec;
  Segmentation seg;
  seg.labels.spec = spec;
  seg.labels.ids.assign(spec.voxel_count(), 0);
  auto& ids = seg.labels.ids;

  const auto& d = spec.dims;
  const std::size_t stride_x = static_cast<std::size_t>(d[1]) * d[2];
  const std::size_t stride_y = d[2];
  std::vector<std::size_t> queue;
  int next_id = 0;
  // Linear order is lexicographic (x, y, z), so each seed is its component's minimum voxel.
  for (std::size_t seed = 0; seed < grid.data.size(); ++seed) {
    const ClassId cat = grid.data[seed];
    if (!wanted[cat] || ids[seed] != 0) continue;
    const int id = ++next_id;
    ids[seed] = id;
    queue.clear();
    queue.push_back(seed);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t i = queue[head];
      const VoxelIndex v = spec.unravel(i);
      auto visit = [&](bool ok, std::size_t j) {
        if (ok && ids[j] == 0 && grid.data[j] == cat) {
          ids[j] = id;
          queue.push_back(j);
        }
      };
      visit(v.x > 0, i - stride_x);
      visit(v.x + 1 < d[0], i + stride_x);
      visit(v.y > 0, i - stride_y);
      visit(v.y + 1 < d[1], i + stride_y);
      visit(v.z > 0, i - 1);
      visit(v.z + 1 < d[2], i + 1);
    }
    ObjectInstance inst;
    inst.object_id = id;
    inst.category = cat;
    std::sort(queue.begin(), queue.end());
    inst.voxels.reserve(queue.size());
    for (std::size_t i : queue) inst.voxels.push_back(spec.unravel(i));
    seg.instances.push_back(std::move(inst));
  }
  seg.labels.count = next_id;
  return seg;
}

std::vector<VoxelIndex> extract_voxels(const LabelVolume& labels, int n) {
  if (n < 1 || n > labels.count) {
    throw Error(ErrorCode::UnknownObjectId, "object id " + std::to_string(n) + " not in 1.." + std::to_string(labels.count));
  }
  std::vector<VoxelIndex> out;
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    if (labels.ids[i] == n) out.push_back(labels.spec.unravel(i));
  }
  return out;
}

std::vector<Point2> convex_hull_2d(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  // Andrew's monotone chain.
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

Rect2 min_area_rect(std::span<const Point2> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "min_area_rect needs at least one point");
  const std::vector<Point2> hull = convex_hull_2d(points);
  const std::size_t h = hull.size();
  if (h < 3) return axis_aligned_rect(points);

  auto at = [&](std::size_t i) -> const Point2& { return hull[i % h]; };
  std::size_t right = 1, top = 1, left = 1;
  Rect2 best;
  double best_area = -1.0;
  for (std::size_t i = 0; i < h; ++i) {
    const Point2 u = (at(i + 1) - at(i)).normalized();
    const Point2 n(-u.y(), u.x());
    // Each pointer only moves forward, so the whole sweep is O(h).
    for (std::size_t s = 0; s < h && at(right + 1).dot(u) >= at(right).dot(u); ++s) ++right;
    if (i == 0) top = right;
    for (std::size_t s = 0; s < h && at(top + 1).dot(n) >= at(top).dot(n); ++s) ++top;
    if (i == 0) left = top;
    for (std::size_t s = 0; s < h && at(left + 1).dot(u) <= at(left).dot(u); ++s) ++left;

    const double u_min = at(left).dot(u);
    const double u_max = at(right).dot(u);
    const double n_min = at(i).dot(n);
    const double n_max = at(top).dot(n);
    const double area = (u_max - u_min) * (n_max - n_min);
    const Point2 center = u * (0.5 * (u_min + u_max)) + n * (0.5 * (n_min + n_max));
    const Rect2 cand = canonical_rect(center, u, u_max - u_min, n_max - n_min);
    const bool better = best_area < 0.0 || area < best_area * (1.0 - 1e-12) ||
                        (area <= best_area * (1.0 + 1e-12) && std::abs(cand.yaw) < std::abs(best.yaw));
    if (better) {
      best = cand;
      if (best_area < 0.0 || area < best_area) best_area = area;
    }
  }
  return best;
}

OrientedBox fit_box(std::span<const VoxelIndex> voxels, double resolution, const Vec3& origin) {
  if (voxels.empty()) throw Error(ErrorCode::EmptyInput, "fit_box needs at least one voxel");
  std::vector<Point2> corners;
  corners.reserve(4 * voxels.size());
  int z_min = voxels.front().z;
  int z_max = voxels.front().z;
  for (const auto& v : voxels) {
    z_min = std::min(z_min, v.z);
    z_max = std::max(z_max, v.z);
    for (int dx = 0; dx <= 1; ++dx) {
      for (int dy = 0; dy <= 1; ++dy) corners.emplace_back(v.x + dx, v.y + dy);
    }
  }
  const Rect2 r = min_area_rect(corners);
  OrientedBox box;
  box.center = origin + resolution * Vec3(r.center.x(), r.center.y(), 0.5 * (z_min + z_max + 1));
  box.yaw = r.yaw;
  box.length = r.length * resolution;
  box.width = r.width * resolution;
  box.height = (z_max - z_min + 1) * resolution;
  return box;
}

OrientedBox fit_box(std::span<const VoxelIndex> voxels, const GridSpec& spec) {
  return fit_box(voxels, spec.resolution, spec.origin_offset);
}

std::vector<ObjectInstance> identify_objects(const SemanticGrid& grid, const std::set<ClassId>& categories) {
  Segmentation seg = segment(grid, categories);
  for (auto& inst : seg.instances) inst.box = fit_box(inst.voxels, grid.spec);
  return std::move(seg.instances);
}

}  // namespace occkit
