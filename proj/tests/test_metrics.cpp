#include <doctest.h>

#include <json.hpp>
#include <random>

#include "occkit/error.hpp"
#include "occkit/metrics.hpp"
#include "occkit/taxonomy.hpp"
#include "oracles.hpp"

using namespace occkit;
using namespace occkit::unified;

namespace {


GridSpec small_spec(int x, int y, int z) {
  GridSpec s;
  s.dims = {x, y, z};
  s.origin_offset = {-0.5 * x * s.resolution, -0.5 * y * s.resolution, -1.0};
  return s;
}

// World-anchored static occupancy: a voxel is filled when the hash of its
// world lattice cell says so. Any lattice-aligned ego pose sees the same world.
SemanticGrid static_world(const GridSpec& spec, const Pose& ego, double fill, std::uint64_t salt) {
  SemanticGrid g(spec, "unified", kFree);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const Vec3 w = ego.apply(voxel_to_ego(spec, spec.unravel(i)));
    // Centres sit on multiples of eps/2, so rounding at that pitch is exact.
    const auto cell = (2.0 * w / spec.resolution).array().round().cast<long long>();
    std::uint64_t h = salt ^ (cell[0] * 73856093ULL) ^ (cell[1] * 19349663ULL) ^ (cell[2] * 83492791ULL);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    if (static_cast<double>(h % 1000) < fill * 1000) g.data[i] = (h >> 20) % 2 ? kBuilding : kRoad;
  }
  return g;
}

// Definition-level background score: every piece computed with plain sets.
double brute_background(const SemanticGrid& a, const SemanticGrid& b, const Pose& ea, const Pose& eb,
                        const std::set<ClassId>& stat) {
  const GridSpec& s = a.spec;
  const Pose fwd = eb.inverse() * ea;
  std::set<std::size_t> proj, obs;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (!stat.count(a.data[i])) continue;
    if (auto v = ego_to_voxel(s, fwd.apply(voxel_to_ego(s, s.unravel(i))))) proj.insert(s.linear(*v));
  }
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    if (!stat.count(b.data[i])) continue;
    if (ego_to_voxel(s, fwd.inverse().apply(voxel_to_ego(s, s.unravel(i))))) obs.insert(i);
  }
  std::vector<std::size_t> inter;
  std::set_intersection(proj.begin(), proj.end(), obs.begin(), obs.end(), std::back_inserter(inter));
  const std::size_t uni = proj.size() + obs.size() - inter.size();
  return uni == 0 ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
}

}  // namespace

TEST_CASE("iou examples") {
  const GridSpec s = small_spec(4, 4, 4);
  SemanticGrid a(s, "unified", kFree), b(s, "unified", kFree);
  SUBCASE("identical") {
    a.at({1, 1, 1}) = kVehicle;
    CHECK(iou_geo(a, a) == 1.0);
  }
  SUBCASE("disjoint") {
    a.at({0, 0, 0}) = kVehicle;
    b.at({3, 3, 3}) = kVehicle;
    CHECK(iou_geo(a, b) == 0.0);
  }
  SUBCASE("eight and eight sharing four") {
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int z = 0; z < 2; ++z) {
          a.at({x, y, z}) = kVehicle;
          b.at({x + 1, y, z}) = kBuilding;
        }
    CHECK(iou_geo(a, b) == doctest::Approx(4.0 / 12.0).epsilon(1e-12));
    CHECK(oracle::nested_iou(a, b, kFree).iou() == doctest::Approx(4.0 / 12.0));
  }
  SUBCASE("both empty") { CHECK(iou_geo(a, b) == 1.0); }
  SUBCASE("spec mismatch") {
    SemanticGrid c(small_spec(4, 4, 5), "unified", kFree);
    CHECK_THROWS_AS(iou_geo(a, c), Error);
  }
}

TEST_CASE("iou and miou against nested loops on random grids") {
  std::mt19937_64 rng(21);
  const GridSpec s = small_spec(20, 20, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<double> dens(0.05, 0.6);
    const std::vector<ClassId> classes{kVehicle, kPedestrian, kBuilding, kRoad, kVegetation};
    const auto a = oracle::random_grid(rng, s, dens(rng), classes, kFree);
    const auto b = oracle::random_grid(rng, s, dens(rng), classes, kFree);
    const auto want = oracle::nested_iou(a, b, kFree);
    const auto got = occupancy_overlap(a, b);
    CHECK(got.intersection == static_cast<std::size_t>(want.inter));
    CHECK(got.union_ == static_cast<std::size_t>(want.uni));
    CHECK(iou_geo(a, b) == doctest::Approx(want.iou()).epsilon(1e-12));
    CHECK(iou_geo(a, b) == iou_geo(b, a));
    const auto per = oracle::nested_per_class(a, b, kFree);
    const auto m = miou_geo(a, b);
    REQUIRE(m.per_class.size() == per.size());
    double sum = 0.0;
    for (const auto& [c, v] : per) {
      CHECK(m.per_class.at(c) == doctest::Approx(v).epsilon(1e-12));
      sum += v;
    }
    CHECK(m.miou == doctest::Approx(sum / per.size()).epsilon(1e-12));
    CHECK(m.miou >= 0.0);
    CHECK(m.miou <= 1.0);
  }
}

TEST_CASE("miou examples") {
  const GridSpec s = small_spec(6, 6, 2);
  SemanticGrid a(s, "unified", kFree);
  a.at({0, 0, 0}) = kVehicle;
  a.at({1, 0, 0}) = kPedestrian;
  a.at({2, 0, 0}) = kBuilding;
  CHECK(miou_geo(a, a).miou == 1.0);
  CHECK(miou_geo(a, a).per_class.size() == 3);

  SemanticGrid p(s, "unified", kFree), g(s, "unified", kFree);
  p.at({0, 0, 0}) = kVehicle;
  g.at({0, 0, 0}) = kVehicle;
  p.at({3, 3, 1}) = kRoad;
  g.at({5, 5, 0}) = kRoad;
  CHECK(miou_geo(p, g).miou == 0.5);

  SUBCASE("one class equals iou") {
    SemanticGrid q(s, "unified", kFree);
    q.at({0, 0, 0}) = kVehicle;
    q.at({4, 4, 0}) = kVehicle;
    SemanticGrid r(s, "unified", kFree);
    r.at({0, 0, 0}) = kVehicle;
    r.at({0, 1, 0}) = kVehicle;
    CHECK(miou_geo(q, r).miou == doctest::Approx(iou_geo(q, r)));
  }
  SUBCASE("requested classes") {
    const std::vector<ClassId> only{kVehicle};
    CHECK(miou_geo(p, g, only).miou == 1.0);
    const std::vector<ClassId> absent{kBicycle};
    CHECK_THROWS_AS(miou_geo(p, g, absent), Error);
  }
  SUBCASE("nothing to evaluate") {
    SemanticGrid e(s, "unified", kFree);
    try {
      miou_geo(e, e);
      FAIL("expected NoEvaluableClass");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::NoEvaluableClass);
    }
  }
}

TEST_CASE("shape consistency examples") {
  std::vector<Vec3> pts;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 2; ++z) pts.emplace_back(0.4 * x, 0.4 * y, 0.4 * z);
  SUBCASE("zero motion") {
    const std::vector<std::vector<Vec3>> frames(5, pts);
    const auto r = track_shape_consistency(frames, 0.4);
    CHECK(r.mean == 1.0);
    CHECK(r.pair_iou.size() == 4);
    for (double v : r.pair_iou) CHECK(v == 1.0);
  }
  SUBCASE("halved set under the same alignment") {
    AlignedShape a, b;
    a.points = pts;
    for (const auto& p : pts) {
      if (p.x() < 1.0) b.points.push_back(p);
    }
    CHECK(point_set_iou(a.points, b.points, 0.4) == 0.5);
    CHECK(aligned_shape_iou(a, b, 0.4) == 0.5);
    const std::vector<AlignedShape> seq{a, b};
    CHECK(shape_consistency(seq, 0.4).mean == 0.5);
  }
  SUBCASE("one frame is not enough") {
    const std::vector<std::vector<Vec3>> frames(1, pts);
    CHECK_THROWS_AS(track_shape_consistency(frames, 0.4), Error);
  }
  SUBCASE("aligned iou is symmetric and bounded") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
      AlignedShape a, b;
      a.points = pts;
      b.points = pts;
      a.axes = oracle::random_pose(rng).rotation();
      b.axes = oracle::random_pose(rng).rotation();
      const double v = aligned_shape_iou(a, b, 0.4);
      CHECK(v == aligned_shape_iou(b, a, 0.4));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(aligned_shape_iou(a, a, 0.4) == 1.0);
    }
  }
}

TEST_CASE("background consistency") {
  const GridSpec s = small_spec(40, 40, 6);
  const auto stat = builtin_taxonomy("unified").static_ids();
  const Pose e0 = Pose::from_translation({0.4 * 3, -0.4 * 2, 0.0});

  SUBCASE("stationary ego") {
    const auto g = static_world(s, e0, 0.3, 1);
    CHECK(background_consistency(g, g, e0, e0, stat).iou == 1.0);
  }
  SUBCASE("one voxel forward") {
    const Pose e1 = Pose::from_translation(e0.translation() + Vec3(0.4, 0, 0));
    const auto a = static_world(s, e0, 0.3, 2), b = static_world(s, e1, 0.3, 2);
    const auto r = background_consistency(a, b, e0, e1, stat);
    CHECK(r.iou == 1.0);
    CHECK(r.projected > 0);
    CHECK(r.observed < static_cast<std::size_t>(std::count_if(b.data.begin(), b.data.end(), [](ClassId c) { return c != kFree; })));
  }
  SUBCASE("every integer shift in a 7x7x7 cube") {
    for (int dx = -3; dx <= 3; ++dx)
      for (int dy = -3; dy <= 3; ++dy)
        for (int dz = -3; dz <= 3; ++dz) {
          const Pose e1 = Pose::from_translation(e0.translation() + 0.4 * Vec3(dx, dy, dz));
          const auto a = static_world(s, e0, 0.25, 3), b = static_world(s, e1, 0.25, 3);
          CHECK(background_consistency(a, b, e0, e1, stat).iou == 1.0);
        }
  }
  SUBCASE("half the observed voxels deleted") {
    const GridSpec big = small_spec(60, 60, 8);
    const auto a = static_world(big, e0, 0.5, 4);
    auto b = a;
    std::mt19937_64 rng(99);
    std::bernoulli_distribution drop(0.5);
    std::size_t kept = 0;
    for (auto& c : b.data) {
      if (c == kFree) continue;
      if (drop(rng)) c = kFree;
      else ++kept;
    }
    REQUIRE(std::count_if(a.data.begin(), a.data.end(), [](ClassId c) { return c != kFree; }) >= 10000);
    const double v = background_consistency(a, b, e0, e0, stat).iou;
    CHECK(v == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(v - 0.5) <= 0.05);
  }
  SUBCASE("dynamic classes are ignored") {
    auto a = static_world(s, e0, 0.3, 5);
    auto b = a;
    // Only into free cells, so the static content stays identical.
    int placed = 0;
    for (std::size_t i = 0; i < a.data.size() && placed < 40; ++i) {
      if (a.data[i] != kFree) continue;
      (placed % 2 ? a : b).data[i] = placed % 3 ? kVehicle : kPedestrian;
      ++placed;
    }
    CHECK(background_consistency(a, b, e0, e0, stat).iou == 1.0);
  }
  SUBCASE("matches the set definition under random motion") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 15; ++t) {
      const Pose e1 = e0 * Pose::from_euler(0.05 * (t % 3), 0.0, 0.3 * t, Vec3(0.37 * t, -0.21 * t, 0.05));
      const auto a = static_world(s, e0, 0.3, 10 + t), b = static_world(s, e1, 0.3, 10 + t);
      const double v = background_consistency(a, b, e0, e1, stat).iou;
      CHECK(v == doctest::Approx(brute_background(a, b, e0, e1, stat)).epsilon(1e-12));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("dimension probability is affine invariant") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    GmmModel m;
    for (int k = 0; k < 3; ++k) {
      Mat3 l = Mat3::Zero();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) l(i, j) = (i == j) ? 0.3 + std::abs(g(rng)) : 0.3 * g(rng);
      m.components.push_back({1.0 / 3, Vec3(4 + g(rng), 2 + g(rng), 1.5 + g(rng)), l * l.transpose()});
    }
    Mat3 a;
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = g(rng);
    a += 2.0 * Mat3::Identity();
    const Vec3 b(g(rng), g(rng), g(rng));
    GmmModel mapped = m;
    for (auto& c : mapped.components) {
      c.mean = a * c.mean + b;
      c.covariance = a * c.covariance * a.transpose();
    }
    const Vec3 x(4 + g(rng), 2 + g(rng), 1.5 + g(rng));
    CHECK(std::abs(dim_probability(x, m) - dim_probability(a * x + b, mapped)) < 1e-9);
  }
}

TEST_CASE("metric report") {
  const auto& tax = builtin_taxonomy("unified");
  MetricReport r;
  r.iou_geo = 0.75;
  r.miou_geo = 0.5;
  r.per_class_iou[kVehicle] = 0.25;
  r.iou_bg = 1.0;
  r.iou_object[kPedestrian] = 0.9;
  r.dimension[kVehicle] = {kVehicle, 0.8, 0.7, 12};
  const std::string text = r.to_text(tax);
  CHECK(text.find("iou_geo = 0.75\n") != std::string::npos);
  CHECK(text.find("miou_geo = 0.5\n") != std::string::npos);
  CHECK(text.find("iou_bg = 1\n") != std::string::npos);
  CHECK(text.find("rho = 0.5\n") != std::string::npos);
  CHECK(text.find("iou_class.vehicle = 0.25\n") != std::string::npos);
  CHECK(text.find("dim_prob.vehicle.count = 12\n") != std::string::npos);
  const auto j = nlohmann::json::parse(r.to_json(tax));
  CHECK(j["iou_geo"].get<double>() == 0.75);
  CHECK(j["iou_object"]["pedestrian"].get<double>() == 0.9);
  CHECK(j["dim_prob"]["vehicle"]["pass_rate"].get<double>() == 0.7);
  CHECK_FALSE(MetricReport{}.to_json(tax).empty());
  CHECK(MetricReport{}.to_text(tax).empty());
}
