#include <doctest.h>

#include <filesystem>

#include "occkit/error.hpp"
#include "occkit/grid.hpp"
#include "occkit/taxonomy.hpp"

using namespace occkit;
namespace fs = std::filesystem;

TEST_CASE("builtin taxonomies are valid") {
  for (const auto& name : builtin_taxonomy_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(builtin_taxonomy(name).validate());
  }
  CHECK_THROWS_AS(builtin_taxonomy("kitti"), Error);
}

TEST_CASE("unified table") {
  const auto& u = builtin_taxonomy("unified");
  CHECK(u.classes.size() == 11);
  CHECK(u.free_id == 10);
  CHECK(u.name_of(0) == "general_object");
  CHECK(u.name_of(5) == "traffic_cone");
  CHECK(u.name_of(8) == "walkable/terrain");
  CHECK(u.id_of("building") == 9);
  CHECK(u.dynamic_ids == std::set<ClassId>{1, 2, 3, 4});
  CHECK(u.priority_order.front() == unified::kPedestrian);
  CHECK(u.priority_order.size() == 10);
}

TEST_CASE("source free ids") {
  CHECK(builtin_taxonomy("nuscenes").free_id == 17);
  CHECK(builtin_taxonomy("waymo").free_id == 23);
  CHECK(builtin_taxonomy("carla").free_id == 0);
  CHECK(builtin_taxonomy("nuscenes").name_of(4) == "car");
  CHECK(builtin_taxonomy("waymo").name_of(4) == "cyclist");
  CHECK(builtin_taxonomy("carla").name_of(10) == "vehicles");
}

TEST_CASE("label maps cover their source and send free to free") {
  for (const char* src : {"nuscenes", "waymo", "carla"}) {
    CAPTURE(src);
    const auto& tax = builtin_taxonomy(src);
    const auto& map = builtin_label_map(src);
    for (const auto& c : tax.classes) CHECK(map.entries.count(c.id) == 1);
    CHECK(map.entries.at(tax.free_id) == unified::kFree);
  }
  CHECK(builtin_label_map("nuscenes").entries.at(4) == unified::kVehicle);
  CHECK(builtin_label_map("nuscenes").entries.at(1) == unified::kGeneralObject);
  CHECK(builtin_label_map("waymo").entries.at(7) == unified::kTrafficCone);
}

TEST_CASE("text formats round-trip") {
  for (const auto& name : builtin_taxonomy_names()) {
    const auto& t = builtin_taxonomy(name);
    const LabelTaxonomy back = parse_taxonomy(format_taxonomy(t));
    CHECK(back.name == t.name);
    CHECK(back.free_id == t.free_id);
    CHECK(back.dynamic_ids == t.dynamic_ids);
    CHECK(back.priority_order == t.priority_order);
    REQUIRE(back.classes.size() == t.classes.size());
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
      CHECK(back.classes[i].id == t.classes[i].id);
      CHECK(back.classes[i].name == t.classes[i].name);
    }
  }
  for (const char* src : {"nuscenes", "waymo", "carla"}) {
    const auto& m = builtin_label_map(src);
    const LabelMap back = parse_label_map(format_label_map(m));
    CHECK(back.source == m.source);
    CHECK(back.target == m.target);
    CHECK(back.entries == m.entries);
  }
}

TEST_CASE("shipped config files match the built-ins") {
  const fs::path dir = fs::path(OCCKIT_SOURCE_DIR) / "config";
  for (const auto& name : builtin_taxonomy_names()) {
    CAPTURE(name);
    const LabelTaxonomy t = load_taxonomy(dir / ("taxonomy_" + name + ".txt"));
    const auto& b = builtin_taxonomy(name);
    CHECK(t.free_id == b.free_id);
    CHECK(t.dynamic_ids == b.dynamic_ids);
    CHECK(t.priority_order == b.priority_order);
    CHECK(t.classes.size() == b.classes.size());
  }
  for (const char* src : {"nuscenes", "waymo", "carla"}) {
    CAPTURE(src);
    CHECK(load_label_map(dir / (std::string("labelmap_") + src + ".txt")).entries == builtin_label_map(src).entries);
  }
}

TEST_CASE("malformed text is a parse error") {
  CHECK_THROWS_AS(parse_label_map("source = nuscenes\ntarget = unified\n4 => 1\n"), Error);
  CHECK_THROWS_AS(parse_taxonomy("name = x\nclass = 0\n"), Error);
}

TEST_CASE("remap nuScenes car to unified vehicle") {
  GridSpec spec;
  spec.dims = {4, 4, 2};
  SemanticGrid g(spec, "nuscenes", 17);
  g.at({1, 2, 0}) = 4;   // car
  g.at({0, 0, 1}) = 11;  // drivable_surface
  const SemanticGrid out = remap_labels(g, builtin_taxonomy("unified"), builtin_label_map("nuscenes"));
  CHECK(out.taxonomy == "unified");
  CHECK(out.data.size() == 32);
  CHECK(out.at({1, 2, 0}) == unified::kVehicle);
  CHECK(out.at({0, 0, 1}) == unified::kRoad);
  CHECK(out.at({3, 3, 1}) == unified::kFree);
}

TEST_CASE("remap all-free grid") {
  GridSpec spec;
  spec.dims = {4, 4, 2};
  for (const char* src : {"nuscenes", "waymo", "carla"}) {
    const auto& tax = builtin_taxonomy(src);
    SemanticGrid g(spec, src, tax.free_id);
    const SemanticGrid out = remap_labels(g, builtin_taxonomy("unified"), builtin_label_map(src));
    CHECK(out.data == std::vector<ClassId>(32, unified::kFree));
  }
}

TEST_CASE("remap preserves occupancy and rejects unmapped ids") {
  GridSpec spec;
  spec.dims = {3, 3, 3};
  const auto& tax = builtin_taxonomy("waymo");
  SemanticGrid g(spec, "waymo", tax.free_id);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = tax.classes[i % tax.classes.size()].id;
  const auto& map = builtin_label_map("waymo");
  const SemanticGrid out = remap_labels(g, builtin_taxonomy("unified"), map);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    CHECK((out.data[i] == unified::kFree) == (map.entries.at(g.data[i]) == unified::kFree));
  }
  LabelMap partial = map;
  partial.entries.erase(4);
  try {
    remap_labels(g, builtin_taxonomy("unified"), partial);
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLabel);
  }
}
