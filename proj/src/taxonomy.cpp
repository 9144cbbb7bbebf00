#include "occkit/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "occkit/error.hpp"

namespace occkit {
namespace {

LabelTaxonomy make_unified() {
  using namespace unified;
  LabelTaxonomy t;
  t.name = "unified";
  t.classes = {{kGeneralObject, "general_object"}, {kVehicle, "vehicle"},
               {kBicycle, "bicycle"},              {kMotorcycle, "motorcycle"},
               {kPedestrian, "pedestrian"},        {kTrafficCone, "traffic_cone"},
               {kVegetation, "vegetation"},        {kRoad, "road"},
               {kWalkableTerrain, "walkable/terrain"}, {kBuilding, "building"},
               {kFree, "free"}};
  t.free_id = kFree;
  t.dynamic_ids = {kVehicle, kBicycle, kMotorcycle, kPedestrian};
  t.priority_order = {kPedestrian, kBicycle,       kMotorcycle, kVehicle, kTrafficCone,
                      kGeneralObject, kBuilding, kVegetation, kRoad,    kWalkableTerrain};
  return t;
}

std::vector<ClassEntry> entries(std::initializer_list<const char*> names) {
  std::vector<ClassEntry> out;
  ClassId id = 0;
  for (const char* n : names) out.push_back({id++, n});
  return out;
}

// Priority of a source class is inherited from the unified class it maps to.
std::vector<ClassId> derived_priority(const LabelTaxonomy& tax, const LabelMap& map) {
  const LabelTaxonomy& uni = builtin_taxonomy("unified");
  auto rank = [&](ClassId id) {
    const int target = map.entries.at(id);
    const auto it = std::find(uni.priority_order.begin(), uni.priority_order.end(), target);
    return static_cast<int>(it - uni.priority_order.begin());
  };
  std::vector<ClassId> ids = tax.occupied_ids();
  std::stable_sort(ids.begin(), ids.end(), [&](ClassId a, ClassId b) { return rank(a) < rank(b); });
  return ids;
}

LabelMap make_nuscenes_map() {
  using namespace unified;
  return {"nuscenes", "unified",
          {{0, kGeneralObject}, {1, kGeneralObject}, {2, kBicycle}, {3, kVehicle},
           {4, kVehicle}, {5, kVehicle}, {6, kMotorcycle}, {7, kPedestrian},
           {8, kTrafficCone}, {9, kVehicle}, {10, kVehicle}, {11, kRoad},
           {12, kWalkableTerrain}, {13, kWalkableTerrain}, {14, kWalkableTerrain},
           {15, kBuilding}, {16, kVegetation}, {17, kFree}}};
}

LabelMap make_waymo_map() {
  using namespace unified;
  return {"waymo", "unified",
          {{0, kGeneralObject}, {1, kVehicle}, {2, kPedestrian}, {3, kGeneralObject},
           {4, kBicycle}, {5, kGeneralObject}, {6, kGeneralObject}, {7, kTrafficCone},
           {8, kBicycle}, {9, kMotorcycle}, {10, kBuilding}, {11, kVegetation},
           {12, kVegetation}, {13, kRoad}, {14, kWalkableTerrain}, {23, kFree}}};
}

LabelMap make_carla_map() {
  using namespace unified;
  return {"carla", "unified",
          {{0, kFree}, {1, kBuilding}, {2, kGeneralObject}, {3, kGeneralObject},
           {4, kPedestrian}, {5, kGeneralObject}, {6, kRoad}, {7, kRoad},
           {8, kWalkableTerrain}, {9, kVegetation}, {10, kVehicle}, {11, kBuilding},
           {12, kGeneralObject}, {13, kFree}, {14, kWalkableTerrain}}};
}

LabelTaxonomy make_nuscenes() {
  LabelTaxonomy t;
  t.name = "nuscenes";
  t.classes = entries({"general_object", "barrier", "bicycle", "bus", "car", "construction_vehicle",
                       "motorcycle", "pedestrian", "traffic_cone", "trailer", "truck",
                       "drivable_surface", "other_flat", "sidewalk", "terrain", "manmade",
                       "vegetation", "free"});
  t.free_id = 17;
  t.dynamic_ids = {2, 3, 4, 5, 6, 7, 9, 10};
  t.priority_order = derived_priority(t, builtin_label_map("nuscenes"));
  return t;
}

LabelTaxonomy make_waymo() {
  LabelTaxonomy t;
  t.name = "waymo";
  t.classes = entries({"general_object", "vehicle", "pedestrian", "sign", "cyclist", "traffic_light",
                       "pole", "construction_cone", "bicycle", "motorcycle", "building",
                       "vegetation", "tree_trunk", "road", "walkable"});
  t.classes.push_back({23, "free"});
  t.free_id = 23;
  t.dynamic_ids = {1, 2, 4, 8, 9};
  t.priority_order = derived_priority(t, builtin_label_map("waymo"));
  return t;
}

LabelTaxonomy make_carla() {
  LabelTaxonomy t;
  t.name = "carla";
  t.classes = entries({"free", "buildings", "fences", "other", "pedestrians", "poles", "roadlines",
                       "roads", "sidewalks", "vegetation", "vehicles", "walls", "trafficSigns", "sky",
                       "ground"});
  t.free_id = 0;
  t.dynamic_ids = {4, 10};
  t.priority_order = derived_priority(t, builtin_label_map("carla"));
  return t;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(std::string_view s, int line) {
  int v = 0;
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected integer, got '" +
                                           std::string(s) + "'");
  }
  return v;
}

ClassId parse_class_id(std::string_view s, int line) {
  const int v = parse_int(s, line);
  if (v < 0 || v > 255) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": class id out of range");
  }
  return static_cast<ClassId>(v);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

// Calls fn(line_number, content) for every non-blank line with comments removed.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) fn(number, line);
    pos = end + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool LabelTaxonomy::contains(int id) const {
  return std::any_of(classes.begin(), classes.end(), [&](const ClassEntry& c) { return c.id == id; });
}

ClassId LabelTaxonomy::id_of(std::string_view class_name) const {
  for (const auto& c : classes) {
    if (c.name == class_name) return c.id;
  }
  throw Error(ErrorCode::UnknownLabel, "no class '" + std::string(class_name) + "' in " + name);
}

std::string_view LabelTaxonomy::name_of(ClassId id) const {
  for (const auto& c : classes) {
    if (c.id == id) return c.name;
  }
  throw Error(ErrorCode::UnknownLabel, "no class id " + std::to_string(id) + " in " + name);
}

std::vector<ClassId> LabelTaxonomy::occupied_ids() const {
  std::vector<ClassId> ids;
  for (const auto& c : classes) {
    if (c.id != free_id) ids.push_back(c.id);
  }
  return ids;
}

std::set<ClassId> LabelTaxonomy::static_ids() const {
  std::set<ClassId> out;
  for (const auto& c : classes) {
    if (is_static(c.id)) out.insert(c.id);
  }
  return out;
}

void LabelTaxonomy::validate() const {
  auto fail = [&](const std::string& m) {
    throw Error(ErrorCode::InvariantViolation, "taxonomy '" + name + "': " + m);
  };
  std::set<ClassId> ids;
  for (const auto& c : classes) {
    if (!ids.insert(c.id).second) fail("duplicate class id " + std::to_string(c.id));
  }
  if (!ids.count(free_id)) fail("free id not among classes");
  for (ClassId d : dynamic_ids) {
    if (!ids.count(d)) fail("dynamic id " + std::to_string(d) + " not among classes");
    if (d == free_id) fail("free id cannot be dynamic");
  }
  std::vector<ClassId> sorted_priority = priority_order;
  std::sort(sorted_priority.begin(), sorted_priority.end());
  std::vector<ClassId> occ = occupied_ids();
  std::sort(occ.begin(), occ.end());
  if (sorted_priority != occ) fail("priority order is not a permutation of the non-free ids");
}

const LabelMap& builtin_label_map(std::string_view source) {
  static const LabelMap nuscenes = make_nuscenes_map();
  static const LabelMap waymo = make_waymo_map();
  static const LabelMap carla = make_carla_map();
  if (source == "nuscenes") return nuscenes;
  if (source == "waymo") return waymo;
  if (source == "carla") return carla;
  throw Error(ErrorCode::UnknownTaxonomy, "no built-in label map from '" + std::string(source) + "'");
}

const LabelTaxonomy& builtin_taxonomy(std::string_view name) {
  static const LabelTaxonomy uni = make_unified();
  if (name == "unified") return uni;
  static const LabelTaxonomy nus = make_nuscenes();
  static const LabelTaxonomy way = make_waymo();
  static const LabelTaxonomy car = make_carla();
  if (name == "nuscenes") return nus;
  if (name == "waymo") return way;
  if (name == "carla") return car;
  throw Error(ErrorCode::UnknownTaxonomy, "no built-in taxonomy '" + std::string(name) + "'");
}

std::vector<std::string> builtin_taxonomy_names() { return {"unified", "nuscenes", "waymo", "carla"}; }

LabelTaxonomy parse_taxonomy(std::string_view text) {
  LabelTaxonomy t;
  bool have_free = false;
  for_each_line(text, [&](int n, std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto tokens = split_ws(value);
    if (key == "name") {
      t.name = std::string(value);
    } else if (key == "free") {
      t.free_id = parse_class_id(value, n);
      have_free = true;
    } else if (key == "class") {
      if (tokens.size() != 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": class = <id> <name>");
      t.classes.push_back({parse_class_id(tokens[0], n), std::string(tokens[1])});
    } else if (key == "dynamic") {
      for (auto tok : tokens) t.dynamic_ids.insert(parse_class_id(tok, n));
    } else if (key == "priority") {
      for (auto tok : tokens) t.priority_order.push_back(parse_class_id(tok, n));
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": unknown key '" + std::string(key) + "'");
    }
  });
  if (!have_free) throw Error(ErrorCode::ParseError, "taxonomy has no 'free' entry");
  t.validate();
  return t;
}

LabelMap parse_label_map(std::string_view text) {
  LabelMap m;
  for_each_line(text, [&](int n, std::string_view line) {
    if (const auto arrow = line.find("->"); arrow != std::string_view::npos) {
      const int src = parse_class_id(line.substr(0, arrow), n);
      const int dst = parse_class_id(line.substr(arrow + 2), n);
      if (!m.entries.emplace(src, dst).second) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": duplicate source id");
      }
      return;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": expected 'src -> dst' or 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "source") m.source = value;
    else if (key == "target") m.target = value;
    else throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": unknown key '" + std::string(key) + "'");
  });
  return m;
}

LabelTaxonomy load_taxonomy(const std::filesystem::path& path) { return parse_taxonomy(read_file(path)); }
LabelMap load_label_map(const std::filesystem::path& path) { return parse_label_map(read_file(path)); }

std::string format_taxonomy(const LabelTaxonomy& t) {
  std::ostringstream out;
  out << "name = " << t.name << "\nfree = " << int(t.free_id) << "\n";
  for (const auto& c : t.classes) out << "class = " << int(c.id) << " " << c.name << "\n";
  out << "dynamic =";
  for (ClassId d : t.dynamic_ids) out << " " << int(d);
  out << "\npriority =";
  for (ClassId p : t.priority_order) out << " " << int(p);
  out << "\n";
  return out.str();
}

std::string format_label_map(const LabelMap& m) {
  std::ostringstream out;
  out << "source = " << m.source << "\ntarget = " << m.target << "\n";
  for (const auto& [src, dst] : m.entries) out << src << " -> " << dst << "\n";
  return out.str();
}

}  // namespace occkit
