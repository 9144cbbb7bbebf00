#include "occkit/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "occkit/error.hpp"
#include "occkit/parallel.hpp"

namespace occkit {
namespace {

void require_same_spec(const SemanticGrid& a, const SemanticGrid& b) {
  if (!(a.spec == b.spec)) throw Error(ErrorCode::SpecMismatch, "grids have different specs");
  if (a.data.size() != b.data.size()) throw Error(ErrorCode::SpecMismatch, "grid data sizes differ");
}

using CellKey = std::array<long long, 3>;

std::vector<CellKey> rasterize(std::span<const Vec3> points, double resolution) {
  std::vector<CellKey> cells;
  cells.reserve(points.size());
  for (const auto& p : points) {
    cells.push_back({static_cast<long long>(std::floor(p.x() / resolution + 0.5)),
                     static_cast<long long>(std::floor(p.y() / resolution + 0.5)),
                     static_cast<long long>(std::floor(p.z() / resolution + 0.5))});
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

// Samples of the solid cubes carried by an alignment: each source voxel is
// an eps-cube rotated by axes^T, sampled kShapeSamples times per axis per cell.
constexpr int kShapeSamples = 4;

std::vector<CellKey> solid_samples(const AlignedShape& s, double resolution) {
  const double h = resolution / kShapeSamples;
  const double half = 0.5 * resolution;
  const double reach = half * std::sqrt(3.0);
  std::vector<CellKey> out;
  out.reserve(s.points.size() * kShapeSamples * kShapeSamples * kShapeSamples);
  for (const auto& q : s.points) {
    const auto lo = [&](double v) { return static_cast<long long>(std::floor((v - reach) / h)); };
    const auto hi = [&](double v) { return static_cast<long long>(std::ceil((v + reach) / h)); };
    for (long long i = lo(q.x()); i <= hi(q.x()); ++i) {
      for (long long j = lo(q.y()); j <= hi(q.y()); ++j) {
        for (long long k = lo(q.z()); k <= hi(q.z()); ++k) {
          const Vec3 c((i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
          if ((s.axes * (c - q)).cwiseAbs().maxCoeff() <= half) out.push_back({i, j, k});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double key_iou(const std::vector<CellKey>& a, const std::vector<CellKey>& b) {
  std::vector<CellKey> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const std::size_t uni = a.size() + b.size() - common.size();
  return uni == 0 ? 1.0 : static_cast<double>(common.size()) / static_cast<double>(uni);
}

}  // namespace

OverlapCounts occupancy_overlap(const SemanticGrid& pred, const SemanticGrid& gt) {
  require_same_spec(pred, gt);
  const ClassId free_pred = taxonomy_of(pred).free_id;
  const ClassId free_gt = taxonomy_of(gt).free_id;
  const auto n = static_cast<std::int64_t>(pred.data.size());
  std::size_t inter = 0;
  std::size_t uni = 0;
#pragma omp parallel for schedule(static) reduction(+ : inter, uni) num_threads(worker_count())
  for (std::int64_t i = 0; i < n; ++i) {
    const bool a = pred.data[i] != free_pred;
    const bool b = gt.data[i] != free_gt;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return {inter, uni};
}

double iou_geo(const SemanticGrid& pred, const SemanticGrid& gt) { return occupancy_overlap(pred, gt).iou(); }

std::vector<OverlapCounts> class_overlap(const SemanticGrid& pred, const SemanticGrid& gt) {
  require_same_spec(pred, gt);
  if (pred.taxonomy != gt.taxonomy) throw Error(ErrorCode::SpecMismatch, "grids use different taxonomies");
  std::vector<OverlapCounts> total(256);
  const auto n = static_cast<std::int64_t>(pred.data.size());
#pragma omp parallel num_threads(worker_count())
  {
    std::array<std::size_t, 256> inter{};
    std::array<std::size_t, 256> uni{};
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const ClassId a = pred.data[i];
      const ClassId b = gt.data[i];
      if (a == b) {
        ++inter[a];
        ++uni[a];
      } else {
        ++uni[a];
        ++uni[b];
      }
    }
#pragma omp critical
    for (int c = 0; c < 256; ++c) {
      total[c].intersection += inter[c];
      total[c].union_ += uni[c];
    }
  }
  return total;
}

MiouResult miou_geo(const SemanticGrid& pred, const SemanticGrid& gt, std::span<const ClassId> classes) {
  const std::vector<OverlapCounts> counts = class_overlap(pred, gt);
  const LabelTaxonomy& tax = taxonomy_of(gt);
  std::vector<ClassId> wanted(classes.begin(), classes.end());
  if (wanted.empty()) wanted = tax.occupied_ids();

  MiouResult out;
  double sum = 0.0;
  for (ClassId c : wanted) {
    if (c == tax.free_id) continue;
    if (counts[c].union_ == 0) continue;
    const double v = counts[c].iou();
    out.per_class[c] = v;
    sum += v;
  }
  if (out.per_class.empty()) throw Error(ErrorCode::NoEvaluableClass, "no requested class occurs in either grid");
  out.miou = sum / static_cast<double>(out.per_class.size());
  return out;
}

double point_set_iou(std::span<const Vec3> a, std::span<const Vec3> b, double resolution) {
  return key_iou(rasterize(a, resolution), rasterize(b, resolution));
}

double aligned_shape_iou(const AlignedShape& a, const AlignedShape& b, double resolution) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvariantViolation, "resolution must be positive");
  return key_iou(solid_samples(a, resolution), solid_samples(b, resolution));
}

ShapeConsistency shape_consistency(std::span<const AlignedShape> aligned, double resolution) {
  if (aligned.size() < 2) throw Error(ErrorCode::InsufficientData, "shape consistency needs at least two frames");
  ShapeConsistency out;
  double sum = 0.0;
  for (std::size_t t = 0; t < aligned.size(); ++t) {
    if (aligned[t].degenerate) ++out.degenerate_frames;
    if (t + 1 < aligned.size()) {
      const double v = aligned_shape_iou(aligned[t], aligned[t + 1], resolution);
      out.pair_iou.push_back(v);
      sum += v;
    }
  }
  out.mean = sum / static_cast<double>(out.pair_iou.size());
  return out;
}

ShapeConsistency track_shape_consistency(std::span<const std::vector<Vec3>> frames, double resolution) {
  const std::vector<AlignedShape> aligned = align_sequence(frames);
  return shape_consistency(aligned, resolution);
}

BackgroundConsistency background_consistency(const SemanticGrid& grid_t, const SemanticGrid& grid_t1,
                                             const Pose& ego_t, const Pose& ego_t1,
                                             const std::set<ClassId>& static_classes) {
  require_same_spec(grid_t, grid_t1);
  ego_t.validate("ego_t");
  ego_t1.validate("ego_t1");
  const GridSpec& spec = grid_t.spec;
  const Pose forward = ego_t1.inverse() * ego_t;
  const Pose back = forward.inverse();
  std::array<std::uint8_t, 256> is_static{};
  for (ClassId c : static_classes) is_static[c] = 1;

  const auto n = static_cast<std::int64_t>(spec.voxel_count());
  std::vector<std::int64_t> target(n, -1);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (std::int64_t i = 0; i < n; ++i) {
    if (!is_static[grid_t.data[i]]) continue;
    const Vec3 c = voxel_to_ego(spec, spec.unravel(static_cast<std::size_t>(i)));
    if (auto v = ego_to_voxel(spec, forward.apply(c))) target[i] = static_cast<std::int64_t>(spec.linear(*v));
  }
  std::vector<std::uint8_t> projected(n, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (target[i] >= 0) projected[target[i]] = 1;
  }

  std::size_t proj_count = 0, obs_count = 0, inter = 0, uni = 0;
#pragma omp parallel for schedule(static) reduction(+ : proj_count, obs_count, inter, uni) num_threads(worker_count())
  for (std::int64_t i = 0; i < n; ++i) {
    const bool p = projected[i] != 0;
    bool o = false;
    if (is_static[grid_t1.data[i]]) {
      const Vec3 c = voxel_to_ego(spec, spec.unravel(static_cast<std::size_t>(i)));
      o = ego_to_voxel(spec, back.apply(c)).has_value();
    }
    proj_count += p ? 1 : 0;
    obs_count += o ? 1 : 0;
    inter += (p && o) ? 1 : 0;
    uni += (p || o) ? 1 : 0;
  }
  BackgroundConsistency out;
  out.projected = proj_count;
  out.observed = obs_count;
  out.intersection = inter;
  out.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  return out;
}

namespace {

std::string key_name(const LabelTaxonomy& tax, ClassId c) {
  if (tax.contains(c)) return std::string(tax.name_of(c));
  return std::to_string(c);
}

}  // namespace

std::string MetricReport::to_text(const LabelTaxonomy& tax) const {
  std::ostringstream out;
  out << std::setprecision(10);
  if (iou_geo) out << "iou_geo = " << *iou_geo << "\n";
  if (miou_geo) out << "miou_geo = " << *miou_geo << "\n";
  for (const auto& [c, v] : per_class_iou) out << "iou_class." << key_name(tax, c) << " = " << v << "\n";
  if (iou_bg) out << "iou_bg = " << *iou_bg << "\n";
  for (const auto& [c, v] : iou_object) out << "iou_object." << key_name(tax, c) << " = " << v << "\n";
  if (!dimension.empty()) out << "rho = " << rho << "\n";
  for (const auto& [c, d] : dimension) {
    out << "dim_prob." << key_name(tax, c) << ".mean = " << d.mean_probability << "\n";
    out << "dim_prob." << key_name(tax, c) << ".pass_rate = " << d.pass_rate << "\n";
    out << "dim_prob." << key_name(tax, c) << ".count = " << d.count << "\n";
  }
  return out.str();
}

std::string MetricReport::to_json(const LabelTaxonomy& tax) const {
  nlohmann::json j = nlohmann::json::object();
  if (iou_geo) j["iou_geo"] = *iou_geo;
  if (miou_geo) j["miou_geo"] = *miou_geo;
  for (const auto& [c, v] : per_class_iou) j["per_class_iou"][key_name(tax, c)] = v;
  if (iou_bg) j["iou_bg"] = *iou_bg;
  for (const auto& [c, v] : iou_object) j["iou_object"][key_name(tax, c)] = v;
  if (!dimension.empty()) j["rho"] = rho;
  for (const auto& [c, d] : dimension) {
    j["dim_prob"][key_name(tax, c)] = {{"mean", d.mean_probability}, {"pass_rate", d.pass_rate}, {"count", d.count}};
  }
  return j.dump();
}

}  // namespace occkit
