#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occkit/flow.hpp"
#include "occkit/gmm.hpp"
#include "occkit/grid.hpp"
#include "occkit/scenegen.hpp"
#include "occkit/tracking.hpp"

namespace occkit {

// Container layout (all little-endian):
//   "UOCC" | u16 version | u16 0xFEFF endianness marker
//   repeated chunks: 4-byte ASCII tag | u64 payload length | payload
// Unknown tags are skipped on decode.
inline constexpr std::uint16_t kContainerVersion = 1;

struct FrameBundle {
  std::optional<GridSpec> spec;  // GSPC; required before SEMG/FLOW/FOVM
  std::optional<SemanticGrid> grid;
  std::vector<FlowField> flows;  // values are stored as f32
  std::optional<FovMask> fov;
  std::optional<Pose> ego_pose;
  std::optional<std::vector<ObjectAnnotation>> annotations;
  std::vector<GmmModel> gmms;
  std::optional<std::vector<Track>> tracks;

  const FlowField* flow(FlowDirection direction) const;
  bool operator==(const FrameBundle&) const = default;
};

std::vector<std::uint8_t> encode(const FrameBundle& bundle);
// Throws BadMagic, UnsupportedVersion, TruncatedChunk or InvariantViolation;
// messages name the chunk tag and byte offset.
FrameBundle decode(std::span<const std::uint8_t> bytes);

void write_bundle(const std::filesystem::path& path, const FrameBundle& bundle);
FrameBundle read_bundle(const std::filesystem::path& path);

/// A scenario directory: manifest.txt plus frame_NNNNNN.uocc per frame.
struct ScenarioManifest {
  std::string taxonomy = "unified";
  GridSpec spec;
  int frames = 0;
};

std::string format_manifest(const ScenarioManifest& manifest);
ScenarioManifest parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& dir, const ScenarioManifest& manifest);
ScenarioManifest read_manifest(const std::filesystem::path& dir);
std::filesystem::path frame_path(const std::filesystem::path& dir, int index);

// Scenario scripts for `occkit synth`; see README for the line format.
// `seed_override` replaces the script's seed when set.
ScenarioScript parse_script(std::string_view text, std::optional<std::uint64_t> seed_override = std::nullopt);
ScenarioScript load_script(const std::filesystem::path& path,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

// Box-dimension samples, one `category length width height` per line.
struct BoxSample {
  ClassId category = 0;
  Vec3 dims = Vec3::Zero();
};
std::vector<BoxSample> parse_box_samples(std::string_view text, const LabelTaxonomy& taxonomy);

// One JSON object per line: timestamp, track_id, category, centroid, box.
std::string format_track_records(const std::vector<Track>& tracks);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace occkit
