#include <doctest.h>

#include <numbers>
#include <random>

#include "occkit/error.hpp"
#include "occkit/objects.hpp"
#include "oracles.hpp"

using namespace occkit;
using namespace occkit::unified;

namespace {

GridSpec spec_of(int l, int w, int h, double res = 0.4) {
  GridSpec s;
  s.dims = {l, w, h};
  s.resolution = res;
  s.origin_offset = Vec3::Zero();
  return s;
}

std::vector<Point2> footprint_corners(std::span<const VoxelIndex> voxels) {
  std::vector<Point2> pts;
  for (const auto& v : voxels) {
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy) pts.emplace_back(v.x + dx, v.y + dy);
  }
  return pts;
}

// Corners of a Rect2 in counter-clockwise order.
std::array<Point2, 4> corners(const Rect2& r) {
  const Point2 u(std::cos(r.yaw), std::sin(r.yaw)), v(-std::sin(r.yaw), std::cos(r.yaw));
  const double a = r.length / 2, b = r.width / 2;
  return {r.center - a * u - b * v, r.center + a * u - b * v, r.center + a * u + b * v, r.center - a * u + b * v};
}

bool encloses(const Rect2& r, std::span<const Point2> pts, double slack) {
  const Point2 u(std::cos(r.yaw), std::sin(r.yaw)), v(-std::sin(r.yaw), std::cos(r.yaw));
  for (const auto& p : pts) {
    const Point2 d = p - r.center;
    if (std::abs(d.dot(u)) > r.length / 2 + slack || std::abs(d.dot(v)) > r.width / 2 + slack) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("separated and diagonal voxels are distinct components") {
  SemanticGrid g(spec_of(5, 5, 1), "unified", kFree);
  g.at({0, 0, 0}) = kVehicle;
  g.at({2, 0, 0}) = kVehicle;
  CHECK(segment(g, {kVehicle}).instances.size() == 2);

  SemanticGrid d(spec_of(5, 5, 1), "unified", kFree);
  d.at({1, 1, 0}) = kVehicle;
  d.at({2, 2, 0}) = kVehicle;
  CHECK(segment(d, {kVehicle}).instances.size() == 2);
  d.at({2, 1, 0}) = kVehicle;
  CHECK(segment(d, {kVehicle}).instances.size() == 1);
}

TEST_CASE("components never merge categories") {
  SemanticGrid g(spec_of(4, 1, 1), "unified", kFree);
  g.data = {kVehicle, kVehicle, kPedestrian, kPedestrian};
  const auto seg = segment(g, {kVehicle, kPedestrian});
  REQUIRE(seg.instances.size() == 2);
  CHECK(seg.instances[0].category == kVehicle);
  CHECK(seg.instances[1].category == kPedestrian);
  CHECK(segment(g, {kPedestrian}).instances.size() == 1);
  CHECK(segment(g, {}).instances.empty());
}

TEST_CASE("labelling equals a recursive flood fill on random grids") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> dens(0.1, 0.5);
  const std::vector<ClassId> classes{kVehicle, kPedestrian, kBuilding};
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = oracle::random_grid(rng, spec_of(30, 30, 8), dens(rng), classes, kFree);
    const std::set<ClassId> cats{kVehicle, kPedestrian};
    int n = 0;
    const auto expect = oracle::flood_fill(g, cats, n);
    const auto seg = segment(g, cats);
    CHECK(seg.labels.count == n);
    CHECK(static_cast<int>(seg.instances.size()) == n);
    CHECK(seg.labels.ids == std::vector<std::int32_t>(expect.begin(), expect.end()));
  }
}

TEST_CASE("segments partition the requested voxels") {
  std::mt19937_64 rng(99);
  const auto g = oracle::random_grid(rng, spec_of(20, 20, 4), 0.35, {kVehicle, kBicycle, kRoad}, kFree);
  const std::set<ClassId> cats{kVehicle, kBicycle};
  const auto seg = segment(g, cats);
  std::vector<int> seen(g.data.size(), 0);
  for (std::size_t k = 0; k < seg.instances.size(); ++k) {
    const auto& inst = seg.instances[k];
    CHECK(inst.object_id == static_cast<int>(k) + 1);
    CHECK(std::is_sorted(inst.voxels.begin(), inst.voxels.end()));
    CHECK(extract_voxels(seg.labels, inst.object_id) == inst.voxels);
    for (const auto& v : inst.voxels) {
      CHECK(g.at(v) == inst.category);
      ++seen[g.spec.linear(v)];
    }
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) CHECK(seen[i] == (cats.count(g.data[i]) ? 1 : 0));
}

TEST_CASE("extract voxels") {
  SemanticGrid g(spec_of(6, 6, 2), "unified", kFree);
  g.at({5, 5, 1}) = kVehicle;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) g.at({x, y, 0}) = kVehicle;
  // Planted L shape of pedestrians.
  const std::vector<VoxelIndex> ell{{3, 0, 0}, {3, 1, 0}, {3, 2, 0}, {4, 2, 0}, {5, 2, 0}};
  for (const auto& v : ell) g.at(v) = kPedestrian;

  const auto seg = segment(g, {kVehicle, kPedestrian});
  REQUIRE(seg.labels.count == 3);
  CHECK(extract_voxels(seg.labels, 1).size() == 4);
  CHECK(extract_voxels(seg.labels, 2) == ell);
  CHECK(extract_voxels(seg.labels, 3) == std::vector<VoxelIndex>{{5, 5, 1}});
  for (int bad : {0, 4, -1}) {
    try {
      extract_voxels(seg.labels, bad);
      FAIL("expected UnknownObjectId");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownObjectId);
    }
  }
}

TEST_CASE("box of an axis-aligned block") {
  std::vector<VoxelIndex> block;
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 3; ++y)
      for (int z = 0; z < 2; ++z) block.push_back({x, y, z});
  const OrientedBox b = fit_box(block, 0.4);
  CHECK(b.length == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.width == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(b.height == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(b.yaw == doctest::Approx(0.0));
  CHECK(b.center.x() == doctest::Approx(1.0));
  CHECK(b.center.y() == doctest::Approx(0.6));
  CHECK(b.center.z() == doctest::Approx(0.4));

  // Long side along y: yaw pi/2.
  std::vector<VoxelIndex> tall;
  for (int y = 0; y < 4; ++y) tall.push_back({0, y, 0});
  const OrientedBox t = fit_box(tall, 1.0);
  CHECK(t.length == doctest::Approx(4.0));
  CHECK(t.width == doctest::Approx(1.0));
  CHECK(t.yaw == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("single voxel box") {
  const std::vector<VoxelIndex> one{{7, 3, 2}};
  const OrientedBox b = fit_box(one, 0.4);
  CHECK(b.length == doctest::Approx(0.4));
  CHECK(b.width == doctest::Approx(0.4));
  CHECK(b.height == doctest::Approx(0.4));
  CHECK(b.yaw == 0.0);
  const GridSpec spec;  // default origin
  const OrientedBox e = fit_box(one, spec);
  CHECK((e.center - voxel_to_ego(spec, one[0])).norm() < 1e-12);
}

TEST_CASE("rasterised 45 degree block") {
  // Voxels whose centres fall inside a 5 x 3 rectangle rotated by 45 degrees.
  const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
  std::vector<VoxelIndex> vox;
  for (int x = -6; x <= 6; ++x)
    for (int y = -6; y <= 6; ++y) {
      const double px = x + 0.5 - 0.5, py = y + 0.5 - 0.5;  // centre the rectangle on a voxel centre
      const double u = c * px + s * py, v = -s * px + c * py;
      if (std::abs(u) <= 2.5 && std::abs(v) <= 1.5) vox.push_back({x + 10, y + 10, 0});
    }
  const OrientedBox b = fit_box(vox, 1.0);
  const auto pts = footprint_corners(vox);
  const double sweep = oracle::sweep_min_area(pts);
  CHECK(b.length * b.width <= sweep * (1 + 1e-6));
  CHECK(std::abs(b.yaw - std::numbers::pi / 4) < 3.0 * std::numbers::pi / 180.0);
  // Unit-square footprints grow the 5 x 3 rectangle by at most half a square
  // diagonal per side; centres inside it never need more.
  const double h = std::sqrt(2.0);
  CHECK(b.length * b.width >= static_cast<double>(vox.size()));
  CHECK(b.length * b.width <= (5 + h) * (3 + h));
}

TEST_CASE("hull of simple shapes") {
  const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}};
  const auto h = convex_hull_2d(square);
  CHECK(h.size() == 4);
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  const auto l = convex_hull_2d(line);
  REQUIRE(l.size() == 2);
  CHECK(((l[0] == Point2(0, 0) && l[1] == Point2(3, 3)) || (l[0] == Point2(3, 3) && l[1] == Point2(0, 0))));
  const std::vector<Point2> one{{2, 5}, {2, 5}};
  CHECK(convex_hull_2d(one).size() == 1);
}

TEST_CASE("hull equals brute force on random points") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 100; ++i) pts.emplace_back(n(rng), n(rng));
    const auto hull = convex_hull_2d(pts);
    std::set<std::pair<double, double>> got;
    for (const auto& p : hull) got.insert({p.x(), p.y()});
    CHECK(got == oracle::brute_hull(pts));
    for (std::size_t i = 0; i < hull.size(); ++i) {
      CHECK(oracle::cross(hull[i], hull[(i + 1) % hull.size()], hull[(i + 2) % hull.size()]) > 0);
    }
  }
}

TEST_CASE("calipers rectangle is minimal and encloses everything") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(5, 200);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Point2> pts;
    const double sx = std::abs(u(rng)) + 0.5, sy = std::abs(u(rng)) + 0.5;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) pts.emplace_back(sx * u(rng), sy * u(rng));
    const Rect2 r = min_area_rect(pts);
    CHECK(encloses(r, pts, 1e-9));
    CHECK(r.area() <= oracle::sweep_min_area(pts) * (1 + 1e-6));
    CHECK(r.length >= r.width);
    CHECK(r.yaw > -std::numbers::pi / 2);
    CHECK(r.yaw <= std::numbers::pi / 2);
  }
}

TEST_CASE("calipers rectangle is rotation equivariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0), a(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(2.0 * u(rng), u(rng));
    const double th = a(rng);
    const Eigen::Rotation2Dd rot(th);
    std::vector<Point2> turned;
    for (const auto& p : pts) turned.push_back(rot * p);
    const Rect2 r0 = min_area_rect(pts), r1 = min_area_rect(turned);
    CHECK(std::abs(r0.length - r1.length) < 1e-9);
    CHECK(std::abs(r0.width - r1.width) < 1e-9);
    double d = std::remainder(r1.yaw - r0.yaw - th, std::numbers::pi);
    CHECK(std::abs(d) < 1e-6);
  }
}

TEST_CASE("fitted boxes enclose every footprint corner") {
  std::mt19937_64 rng(31);
  const auto g = oracle::random_grid(rng, spec_of(24, 24, 3), 0.3, {kVehicle}, kFree);
  for (const auto& obj : identify_objects(g, {kVehicle})) {
    const auto pts = footprint_corners(obj.voxels);
    Rect2 r;
    r.center = Point2(obj.box.center.x(), obj.box.center.y()) / g.spec.resolution;
    r.yaw = obj.box.yaw;
    r.length = obj.box.length / g.spec.resolution;
    r.width = obj.box.width / g.spec.resolution;
    CHECK(encloses(r, pts, 1e-9));
    CHECK(obj.box.length >= obj.box.width);
    CHECK(obj.box.width > 0);
    int zmin = 1 << 20, zmax = -1;
    for (const auto& v : obj.voxels) {
      zmin = std::min(zmin, v.z);
      zmax = std::max(zmax, v.z);
    }
    CHECK(obj.box.height == doctest::Approx((zmax - zmin + 1) * g.spec.resolution));
    (void)corners;
  }
}
