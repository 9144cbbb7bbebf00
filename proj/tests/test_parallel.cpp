#include <doctest.h>

#include <numbers>

#include "occkit/flow.hpp"
#include "occkit/metrics.hpp"
#include "occkit/parallel.hpp"
#include "occkit/reference.hpp"
#include "occkit/scenegen.hpp"
#include "occkit/taxonomy.hpp"
#include "oracles.hpp"

using namespace occkit;

namespace {

struct WorkerGuard {
  ~WorkerGuard() { set_worker_count(0); }
};

RandomScenarioOptions world() {
  RandomScenarioOptions o;
  o.spec.dims = {100, 100, 10};
  o.spec.origin_offset = {-20.0, -20.0, -1.0};
  o.duration = 4;
  o.agents = 5;
  return o;
}

FramePair pair_of(const ScenarioScript& sc, int t) {
  const auto a = render_frame(sc, t), b = render_frame(sc, t + 1);
  return {a.grid, b.grid, a.ego, b.ego, a.annotations, b.annotations};
}

double max_gap(const FlowField& a, const FlowField& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

}  // namespace

TEST_CASE("worker count") {
  WorkerGuard g;
  CHECK(worker_count() >= 1);
  set_worker_count(3);
  CHECK(worker_count() == 3);
  set_worker_count(0);
  CHECK(worker_count() >= 1);
}

TEST_CASE("parallel kernels match the serial references") {
  WorkerGuard g;
  const ScenarioScript sc = random_scenario(8, world());
  const auto stat = builtin_taxonomy("unified").static_ids();
  std::mt19937_64 rng(12);
  std::vector<CameraModel> cams;
  for (int k = 0; k < 6; ++k) cams.push_back(CameraModel::looking_along(k * std::numbers::pi / 3, 1.2, 1600, 900));

  for (int workers : {1, 2, 3, 4, 7}) {
    set_worker_count(workers);
    CAPTURE(workers);
    for (int t = 0; t + 1 < sc.duration; ++t) {
      const FramePair fp = pair_of(sc, t);

      CHECK(render_frame(sc, t).grid == reference::render_frame(sc, t).grid);
      CHECK(render_frame(sc, t).owner == reference::render_frame(sc, t).owner);

      const FlowField s = static_flow(fp), rs = reference::static_flow(fp);
      CHECK(s.validity == rs.validity);
      CHECK(max_gap(s, rs) <= 1e-9);

      FlowStats st, rst;
      const FlowField d = dynamic_flow(fp, &st), rd = reference::dynamic_flow(fp, &rst);
      CHECK(d.validity == rd.validity);
      CHECK(max_gap(d, rd) <= 1e-9);
      CHECK(st.unattributed == rst.unattributed);
      CHECK(st.vanished == rst.vanished);

      const auto o = occupancy_overlap(fp.grid_t, fp.grid_t1), ro = reference::occupancy_overlap(fp.grid_t, fp.grid_t1);
      CHECK(o.intersection == ro.intersection);
      CHECK(o.union_ == ro.union_);
      const auto c = class_overlap(fp.grid_t, fp.grid_t1), rc = reference::class_overlap(fp.grid_t, fp.grid_t1);
      REQUIRE(c.size() == rc.size());
      for (std::size_t k = 0; k < c.size(); ++k) {
        CHECK(c[k].intersection == rc[k].intersection);
        CHECK(c[k].union_ == rc[k].union_);
      }
      const auto b = background_consistency(fp.grid_t, fp.grid_t1, fp.ego_t, fp.ego_t1, stat);
      const auto rb = reference::background_consistency(fp.grid_t, fp.grid_t1, fp.ego_t, fp.ego_t1, stat);
      CHECK(b.iou == rb.iou);
      CHECK(b.projected == rb.projected);
      CHECK(b.observed == rb.observed);
    }
    CHECK(fov_mask(sc.spec, cams) == reference::fov_mask(sc.spec, cams));
  }
}

TEST_CASE("results do not depend on the worker count") {
  WorkerGuard g;
  const ScenarioScript sc = random_scenario(9, world());
  set_worker_count(1);
  const FramePair fp = pair_of(sc, 1);
  const FlowField f1 = forward_flow(fp), b1 = backward_flow(fp);
  const auto r1 = render_frame(sc, 2);
  for (int workers : {2, 5, 8}) {
    set_worker_count(workers);
    CHECK(forward_flow(fp) == f1);
    CHECK(backward_flow(fp) == b1);
    CHECK(render_frame(sc, 2).grid == r1.grid);
    CHECK(render_frame(sc, 2).owner == r1.owner);
  }
}
