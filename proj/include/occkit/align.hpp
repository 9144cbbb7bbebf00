#pragma once

#include <optional>
#include <span>
#include <vector>

#include "occkit/pose.hpp"

namespace occkit {

struct AlignedShape {
  std::vector<Vec3> points;  // centred, expressed in the principal-axis basis
  Mat3 axes = Mat3::Identity();  // principal axes as columns, right-handed
  Vec3 eigenvalues = Vec3::Zero();  // descending
  bool degenerate = false;  // spectrum gap below tolerance, fallback axes used
};

// Subtracts the mean; throws EmptyInput.
std::vector<Vec3> center(std::span<const Vec3> points);

inline constexpr double kEigenGapTolerance = 1e-9;

// PCA orientation with sign continuity. With prev_axes, each axis is flipped to
// agree with the previous frame; without, the third central moment along each
// axis decides (largest component positive if that moment vanishes).
AlignedShape canonicalize(std::span<const Vec3> centered, const std::optional<Mat3>& prev_axes = std::nullopt);

// center + canonicalize along a sequence, chaining each frame's axes into the next.
std::vector<AlignedShape> align_sequence(std::span<const std::vector<Vec3>> frames);

}  // namespace occkit
