#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occkit/pose.hpp"
#include "occkit/taxonomy.hpp"

namespace occkit {

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  auto operator<=>(const VoxelIndex&) const = default;
};

/// Ego-centred voxel lattice: dims along heading/lateral/vertical, edge length
/// `resolution` in meters, and the metric position of the (0,0,0) corner.
struct GridSpec {
  std::array<int, 3> dims{200, 200, 16};
  double resolution = 0.4;
  Vec3 origin_offset{-40.0, -40.0, -1.0};

  static GridSpec default_spec() { return {}; }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  bool in_bounds(const VoxelIndex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims[0] && v.y < dims[1] && v.z < dims[2];
  }
  // x-major, then y, then z (C order over [L][W][H]).
  std::size_t linear(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v.x) * dims[1] + v.y) * dims[2] + v.z;
  }
  VoxelIndex unravel(std::size_t i) const {
    const auto h = static_cast<std::size_t>(dims[2]);
    const auto w = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(i / (w * h)), static_cast<int>((i / h) % w), static_cast<int>(i % h)};
  }

  void validate() const;
  bool operator==(const GridSpec& other) const {
    return dims == other.dims && resolution == other.resolution &&
           origin_offset == other.origin_offset;
  }
};

Vec3 voxel_to_ego(const GridSpec& spec, const VoxelIndex& v);
// std::nullopt signals out-of-bounds.
std::optional<VoxelIndex> ego_to_voxel(const GridSpec& spec, const Vec3& p);
// Continuous floor index, no bounds check.
VoxelIndex ego_to_voxel_unchecked(const GridSpec& spec, const Vec3& p);

enum class FrameTag : std::uint8_t { Ego = 0, World = 1 };

struct SemanticGrid {
  GridSpec spec;
  std::string taxonomy = "unified";
  std::vector<ClassId> data;
  std::int64_t timestamp = 0;
  FrameTag frame = FrameTag::Ego;

  SemanticGrid() = default;
  SemanticGrid(const GridSpec& s, std::string tax, ClassId fill);

  ClassId at(const VoxelIndex& v) const { return data[spec.linear(v)]; }
  ClassId& at(const VoxelIndex& v) { return data[spec.linear(v)]; }

  // Throws InvariantViolation if the data size or any ID disagrees with the
  // spec or taxonomy.
  void validate(const LabelTaxonomy& tax) const;
  bool operator==(const SemanticGrid&) const = default;
};

// Resolves a grid's taxonomy name against the built-ins.
const LabelTaxonomy& taxonomy_of(const SemanticGrid& grid);

struct FovMask {
  GridSpec spec;
  std::vector<std::uint8_t> data;
  std::size_t visible_count() const;
  bool operator==(const FovMask&) const = default;
};

struct CameraModel {
  Mat3 intrinsics = Mat3::Identity();
  Pose extrinsic;  // camera -> ego; optical frame is x right, y down, z forward.
  std::array<int, 2> image_size{1, 1};

  // Three-scalar intrinsics (f_x, f_y) with the principal point at the image centre.
  static CameraModel from_focal(double fx, double fy, int width, int height, const Pose& extrinsic);
  // Optical axis along `forward_yaw` in the ego x-y plane, horizontal FOV in radians.
  static CameraModel looking_along(double forward_yaw, double horizontal_fov, int width, int height,
                                   const Vec3& position = Vec3::Zero());

  void validate() const;
  // Pixel coordinates and depth of an ego-frame point.
  struct Projection {
    double u;
    double v;
    double depth;
  };
  Projection project(const Vec3& ego_point) const;
  bool sees(const Vec3& ego_point) const;
};

struct Size3 {
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  bool operator==(const Size3&) const = default;
};

struct ObjectAnnotation {
  Pose agent_to_ego;
  Size3 size;
  ClassId category = unified::kVehicle;
  std::int64_t agent_id = 0;

  void validate() const;
  // Centre-in-box test, half extents inflated by `margin` per side.
  bool contains(const Vec3& ego_point, double margin = 0.0) const;
  double volume() const { return size.length * size.width * size.height; }
  bool operator==(const ObjectAnnotation&) const = default;
};

SemanticGrid remap_labels(const SemanticGrid& grid, const LabelTaxonomy& target, const LabelMap& mapping);

// L x W array (x-major) of the highest-priority non-free label in each column.
std::vector<ClassId> collapse_2d(const SemanticGrid& grid, const LabelTaxonomy& taxonomy);
std::vector<ClassId> collapse_2d(const SemanticGrid& grid);

FovMask fov_mask(const GridSpec& spec, std::span<const CameraModel> cameras);

}  // namespace occkit
