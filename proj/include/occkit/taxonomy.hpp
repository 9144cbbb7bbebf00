#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace occkit {

using ClassId = std::uint8_t;

struct ClassEntry {
  ClassId id;
  std::string name;
};

/// A semantic label set: class IDs, the free ID, which IDs are dynamic
/// foreground, and the priority used when collapsing columns to 2D.
struct LabelTaxonomy {
  std::string name;
  std::vector<ClassEntry> classes;
  ClassId free_id = 0;
  std::set<ClassId> dynamic_ids;
  // Highest priority first; covers every non-free ID exactly once.
  std::vector<ClassId> priority_order;

  bool contains(int id) const;
  bool is_dynamic(ClassId id) const { return dynamic_ids.count(id) > 0; }
  bool is_static(ClassId id) const { return id != free_id && !is_dynamic(id); }
  // Class ID by name; throws UnknownLabel.
  ClassId id_of(std::string_view class_name) const;
  std::string_view name_of(ClassId id) const;
  std::vector<ClassId> occupied_ids() const;
  std::set<ClassId> static_ids() const;

  // Throws InvariantViolation describing the first broken invariant.
  void validate() const;
};

// Built-in taxonomies: "unified", "nuscenes", "waymo", "carla".
const LabelTaxonomy& builtin_taxonomy(std::string_view name);
std::vector<std::string> builtin_taxonomy_names();

namespace unified {
// Unified 11-class taxonomy IDs.
inline constexpr ClassId kGeneralObject = 0;
inline constexpr ClassId kVehicle = 1;
inline constexpr ClassId kBicycle = 2;
inline constexpr ClassId kMotorcycle = 3;
inline constexpr ClassId kPedestrian = 4;
inline constexpr ClassId kTrafficCone = 5;
inline constexpr ClassId kVegetation = 6;
inline constexpr ClassId kRoad = 7;
inline constexpr ClassId kWalkableTerrain = 8;
inline constexpr ClassId kBuilding = 9;
inline constexpr ClassId kFree = 10;
}  // namespace unified

/// Many-to-one correspondence from a source taxonomy into a target taxonomy.
struct LabelMap {
  std::string source;
  std::string target;
  std::map<int, int> entries;
};

// Built-in maps into "unified" from "nuscenes", "waymo", "carla".
const LabelMap& builtin_label_map(std::string_view source);

// Text formats (UTF-8, one `key = value` or `src -> dst` per line, `#` comments).
LabelTaxonomy parse_taxonomy(std::string_view text);
LabelMap parse_label_map(std::string_view text);
LabelTaxonomy load_taxonomy(const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);
std::string format_taxonomy(const LabelTaxonomy& taxonomy);
std::string format_label_map(const LabelMap& map);

}  // namespace occkit
