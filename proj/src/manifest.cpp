// Text formats: scenario manifests, synth scripts, box samples, track records.
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "occkit/error.hpp"
#include "occkit/io.hpp"

namespace occkit {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Line {
  int number;
  std::string key;
  std::vector<std::string> words;
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

// `key = a b c` lines; `#` starts a comment.
std::vector<Line> key_value_lines(std::string_view text) {
  std::vector<Line> out;
  int n = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++n;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) parse_fail(n, "expected 'key = value'");
    Line l{n, std::string(trim(raw.substr(0, eq))), {}};
    std::istringstream ws{std::string(raw.substr(eq + 1))};
    for (std::string w; ws >> w;) l.words.push_back(w);
    if (l.key.empty() || l.words.empty()) parse_fail(n, "empty key or value");
    out.push_back(std::move(l));
  }
  return out;
}

double to_double(const std::string& w, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || p != w.data() + w.size() || !std::isfinite(v)) {
    parse_fail(line, "not a number: '" + w + "'");
  }
  return v;
}

long long to_int(const std::string& w, int line) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || p != w.data() + w.size()) parse_fail(line, "not an integer: '" + w + "'");
  return v;
}

void expect_count(const Line& l, std::size_t lo, std::size_t hi = 0) {
  if (hi == 0) hi = lo;
  if (l.words.size() < lo || l.words.size() > hi) {
    parse_fail(l.number, "'" + l.key + "' takes " + std::to_string(lo) +
                             (hi != lo ? "-" + std::to_string(hi) : "") + " values");
  }
}

Vec3 vec_at(const Line& l, std::size_t i) {
  return {to_double(l.words[i], l.number), to_double(l.words[i + 1], l.number),
          to_double(l.words[i + 2], l.number)};
}

// Spec-related keys shared by manifests and scripts. Returns false if not a spec key.
bool apply_spec_key(GridSpec& spec, const Line& l) {
  if (l.key == "dims") {
    expect_count(l, 3);
    for (int i = 0; i < 3; ++i) {
      const auto d = to_int(l.words[i], l.number);
      if (d <= 0 || d > (1 << 16)) parse_fail(l.number, "dimension out of range");
      spec.dims[i] = static_cast<int>(d);
    }
  } else if (l.key == "resolution") {
    expect_count(l, 1);
    spec.resolution = to_double(l.words[0], l.number);
  } else if (l.key == "origin") {
    expect_count(l, 3);
    spec.origin_offset = vec_at(l, 0);
  } else {
    return false;
  }
  return true;
}

ClassId category_of(const std::string& w, const LabelTaxonomy& tax, int line) {
  if (!w.empty() && (std::isdigit(static_cast<unsigned char>(w[0])) != 0)) {
    const auto v = to_int(w, line);
    if (v < 0 || v > 255 || !tax.contains(static_cast<int>(v))) parse_fail(line, "unknown class id " + w);
    return static_cast<ClassId>(v);
  }
  try {
    return tax.id_of(w);
  } catch (const Error&) {
    parse_fail(line, "unknown class '" + w + "' in taxonomy " + tax.name);
  }
}

// `static x y z yaw` | `cv x y z yaw vx vy vz` | `ctr x y z yaw speed yaw_rate`
MotionModel parse_motion(const Line& l, std::size_t at) {
  if (at >= l.words.size()) parse_fail(l.number, "missing motion kind");
  const std::string& kind = l.words[at];
  const std::size_t rest = l.words.size() - at - 1;
  MotionModel m;
  auto initial = [&] {
    return Pose::from_yaw(to_double(l.words[at + 4], l.number), vec_at(l, at + 1));
  };
  if (kind == "static") {
    if (rest != 4) parse_fail(l.number, "static motion takes x y z yaw");
    m.kind = MotionKind::Static;
    m.initial = initial();
  } else if (kind == "cv") {
    if (rest != 7) parse_fail(l.number, "cv motion takes x y z yaw vx vy vz");
    m.kind = MotionKind::ConstantVelocity;
    m.initial = initial();
    m.velocity = vec_at(l, at + 5);
  } else if (kind == "ctr") {
    if (rest != 6) parse_fail(l.number, "ctr motion takes x y z yaw speed yaw_rate");
    m.kind = MotionKind::ConstantTurnRate;
    m.initial = initial();
    m.speed = to_double(l.words[at + 5], l.number);
    m.yaw_rate = to_double(l.words[at + 6], l.number);
  } else if (kind == "explicit") {
    if (rest != 0) parse_fail(l.number, "explicit motion takes its poses from agent_pose lines");
    m.kind = MotionKind::Explicit;
  } else {
    parse_fail(l.number, "unknown motion kind '" + kind + "'");
  }
  return m;
}

}  // namespace

std::string format_manifest(const ScenarioManifest& m) {
  // Shortest representation that reads back to the same double.
  auto num = [](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  std::ostringstream out;
  out << "taxonomy = " << m.taxonomy << "\n"
      << "dims = " << m.spec.dims[0] << " " << m.spec.dims[1] << " " << m.spec.dims[2] << "\n"
      << "resolution = " << num(m.spec.resolution) << "\n"
      << "origin = " << num(m.spec.origin_offset.x()) << " " << num(m.spec.origin_offset.y()) << " "
      << num(m.spec.origin_offset.z()) << "\n"
      << "frames = " << m.frames << "\n";
  return out.str();
}

ScenarioManifest parse_manifest(std::string_view text) {
  ScenarioManifest m;
  bool have_frames = false;
  for (const auto& l : key_value_lines(text)) {
    if (apply_spec_key(m.spec, l)) continue;
    if (l.key == "taxonomy") {
      expect_count(l, 1);
      m.taxonomy = l.words[0];
    } else if (l.key == "frames") {
      expect_count(l, 1);
      const auto n = to_int(l.words[0], l.number);
      if (n < 0 || n > 1'000'000) parse_fail(l.number, "frame count out of range");
      m.frames = static_cast<int>(n);
      have_frames = true;
    } else {
      parse_fail(l.number, "unknown manifest key '" + l.key + "'");
    }
  }
  if (!have_frames) throw Error(ErrorCode::ParseError, "manifest has no 'frames' entry");
  try {
    m.spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest grid: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const ScenarioManifest& manifest) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "manifest.txt", format_manifest(manifest));
}

ScenarioManifest read_manifest(const std::filesystem::path& dir) {
  return parse_manifest(read_text_file(dir / "manifest.txt"));
}

std::filesystem::path frame_path(const std::filesystem::path& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06d.uocc", index);
  return dir / name;
}

ScenarioScript parse_script(std::string_view text, std::optional<std::uint64_t> seed_override) {
  const auto lines = key_value_lines(text);
  ScenarioScript s;

  // The taxonomy is needed to resolve category names, wherever it appears.
  for (const auto& l : lines) {
    if (l.key == "taxonomy") {
      expect_count(l, 1);
      s.taxonomy = l.words[0];
    }
  }
  const LabelTaxonomy* tax = nullptr;
  try {
    tax = &builtin_taxonomy(s.taxonomy);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }

  std::optional<MotionModel> ego;
  std::map<int, Pose> ego_poses;
  std::map<std::int64_t, std::map<int, Pose>> agent_poses;
  int random_agents = 0;
  int random_buildings = 0;

  for (const auto& l : lines) {
    if (apply_spec_key(s.spec, l)) continue;
    if (l.key == "taxonomy") continue;
    if (l.key == "duration") {
      expect_count(l, 1);
      const auto d = to_int(l.words[0], l.number);
      if (d < 1 || d > 100'000) parse_fail(l.number, "duration out of range");
      s.duration = static_cast<int>(d);
    } else if (l.key == "seed") {
      expect_count(l, 1);
      const auto v = to_int(l.words[0], l.number);
      if (v < 0) parse_fail(l.number, "seed must be non-negative");
      s.seed = static_cast<std::uint64_t>(v);
    } else if (l.key == "ego") {
      ego = parse_motion(l, 0);
      if (ego->kind == MotionKind::Explicit) parse_fail(l.number, "use ego_pose lines for an explicit ego");
    } else if (l.key == "ego_pose") {
      expect_count(l, 7);
      const auto t = to_int(l.words[0], l.number);
      if (t < 0) parse_fail(l.number, "negative frame index");
      ego_poses[static_cast<int>(t)] =
          Pose::from_euler(to_double(l.words[4], l.number), to_double(l.words[5], l.number),
                           to_double(l.words[6], l.number), vec_at(l, 1));
    } else if (l.key == "agent") {
      if (l.words.size() < 6) parse_fail(l.number, "agent takes id category l w h motion...");
      ScriptedAgent a;
      a.agent_id = to_int(l.words[0], l.number);
      a.category = category_of(l.words[1], *tax, l.number);
      a.size = {to_double(l.words[2], l.number), to_double(l.words[3], l.number),
                to_double(l.words[4], l.number)};
      a.motion = parse_motion(l, 5);
      for (const auto& other : s.agents) {
        if (other.agent_id == a.agent_id) parse_fail(l.number, "duplicate agent id");
      }
      s.agents.push_back(std::move(a));
    } else if (l.key == "agent_pose") {
      expect_count(l, 6);
      const auto t = to_int(l.words[1], l.number);
      if (t < 0) parse_fail(l.number, "negative frame index");
      agent_poses[to_int(l.words[0], l.number)][static_cast<int>(t)] =
          Pose::from_yaw(to_double(l.words[5], l.number), vec_at(l, 2));
    } else if (l.key == "prop") {
      expect_count(l, 7);
      StaticProp p;
      p.category = category_of(l.words[0], *tax, l.number);
      p.min = vec_at(l, 1);
      p.max = vec_at(l, 4);
      s.static_props.push_back(p);
    } else if (l.key == "random_agents" || l.key == "random_buildings") {
      expect_count(l, 1);
      const auto n = to_int(l.words[0], l.number);
      if (n < 0 || n > 10'000) parse_fail(l.number, "count out of range");
      (l.key == "random_agents" ? random_agents : random_buildings) = static_cast<int>(n);
    } else {
      parse_fail(l.number, "unknown script key '" + l.key + "'");
    }
  }
  if (seed_override) s.seed = *seed_override;

  if (ego && !ego_poses.empty()) throw Error(ErrorCode::ParseError, "both 'ego' and 'ego_pose' given");
  if (!ego_poses.empty()) {
    for (int t = 0; t < s.duration; ++t) {
      auto it = ego_poses.find(t);
      if (it == ego_poses.end()) throw Error(ErrorCode::ParseError, "missing ego_pose for frame " + std::to_string(t));
      s.ego_trajectory.push_back(it->second);
    }
  } else if (ego) {
    for (int t = 0; t < s.duration; ++t) s.ego_trajectory.push_back(ego->pose_at(t));
  }

  for (auto& a : s.agents) {
    auto it = agent_poses.find(a.agent_id);
    if (a.motion.kind != MotionKind::Explicit) {
      if (it != agent_poses.end()) throw Error(ErrorCode::ParseError, "agent_pose given for a parametric agent");
      continue;
    }
    for (int t = 0; t < s.duration; ++t) {
      if (it == agent_poses.end() || !it->second.contains(t)) {
        throw Error(ErrorCode::ParseError, "missing agent_pose for agent " + std::to_string(a.agent_id) +
                                               " frame " + std::to_string(t));
      }
      a.motion.poses.push_back(it->second.at(t));
    }
    a.motion.initial = a.motion.poses.front();
  }
  for (const auto& [id, poses] : agent_poses) {
    bool known = false;
    for (const auto& a : s.agents) known = known || a.agent_id == id;
    if (!known) throw Error(ErrorCode::ParseError, "agent_pose for undeclared agent " + std::to_string(id));
  }

  if (random_agents > 0 || random_buildings > 0) {
    if (s.taxonomy != "unified") throw Error(ErrorCode::ParseError, "random content requires the unified taxonomy");
    RandomScenarioOptions opts;
    opts.spec = s.spec;
    opts.duration = s.duration;
    opts.agents = random_agents;
    opts.buildings = random_buildings;
    opts.moving_ego = !ego && ego_poses.empty();
    ScenarioScript r = random_scenario(s.seed, opts);
    if (s.ego_trajectory.empty()) s.ego_trajectory = r.ego_trajectory;
    for (auto& a : r.agents) {
      for (const auto& b : s.agents) {
        if (b.agent_id == a.agent_id) throw Error(ErrorCode::ParseError, "scripted agent id clashes with random agent");
      }
      s.agents.push_back(std::move(a));
    }
    s.static_props.insert(s.static_props.begin(), r.static_props.begin(), r.static_props.end());
  }
  if (s.ego_trajectory.empty()) s.ego_trajectory.assign(static_cast<std::size_t>(s.duration), Pose::identity());

  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return s;
}

ScenarioScript load_script(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return parse_script(read_text_file(path), seed_override);
}

std::vector<BoxSample> parse_box_samples(std::string_view text, const LabelTaxonomy& taxonomy) {
  std::vector<BoxSample> out;
  std::istringstream in{std::string(text)};
  int n = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++n;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream ws(raw);
    std::vector<std::string> w;
    for (std::string s; ws >> s;) w.push_back(s);
    if (w.empty()) continue;
    if (w.size() != 4) parse_fail(n, "expected 'category length width height'");
    BoxSample b;
    b.category = category_of(w[0], taxonomy, n);
    b.dims = {to_double(w[1], n), to_double(w[2], n), to_double(w[3], n)};
    if ((b.dims.array() <= 0.0).any()) parse_fail(n, "box dimensions must be positive");
    out.push_back(b);
  }
  return out;
}

std::string format_track_records(const std::vector<Track>& tracks) {
  std::string out;
  for (const auto& t : tracks) {
    for (const auto& p : t.frames) {
      nlohmann::json j;
      j["timestamp"] = p.timestamp;
      j["track_id"] = t.track_id;
      j["category"] = t.category;
      j["object_id"] = p.object_id;
      j["centroid"] = {p.centroid.x(), p.centroid.y(), p.centroid.z()};
      j["box"] = {{"center", {p.box.center.x(), p.box.center.y(), p.box.center.z()}},
                  {"yaw", p.box.yaw},
                  {"length", p.box.length},
                  {"width", p.box.width},
                  {"height", p.box.height}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace occkit
