#include "occkit/align.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "occkit/error.hpp"

namespace occkit {

std::vector<Vec3> center(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "cannot centre an empty point set");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p - mean);
  return out;
}

AlignedShape canonicalize(std::span<const Vec3> centered, const std::optional<Mat3>& prev_axes) {
  if (centered.empty()) throw Error(ErrorCode::EmptyInput, "cannot canonicalize an empty point set");
  Mat3 cov = Mat3::Zero();
  for (const auto& p : centered) cov.noalias() += p * p.transpose();
  cov /= static_cast<double>(centered.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  // Eigen returns ascending order.
  const Vec3 ascending = solver.eigenvalues();
  AlignedShape out;
  out.eigenvalues = Vec3(std::max(ascending[2], 0.0), std::max(ascending[1], 0.0), std::max(ascending[0], 0.0));
  Mat3 axes;
  axes.col(0) = solver.eigenvectors().col(2);
  axes.col(1) = solver.eigenvectors().col(1);
  axes.col(2) = solver.eigenvectors().col(0);

  const double gap01 = out.eigenvalues[0] - out.eigenvalues[1];
  const double gap12 = out.eigenvalues[1] - out.eigenvalues[2];
  if (gap01 < kEigenGapTolerance || gap12 < kEigenGapTolerance) {
    out.degenerate = true;
    axes = prev_axes.value_or(Mat3::Identity());
  } else {
    for (int i = 0; i < 3; ++i) {
      double sign_hint = 0.0;
      if (prev_axes) {
        sign_hint = prev_axes->col(i).dot(axes.col(i));
      } else {
        double third = 0.0;
        for (const auto& p : centered) {
          const double s = p.dot(axes.col(i));
          third += s * s * s;
        }
        third /= static_cast<double>(centered.size());
        if (std::abs(third) >= 1e-9) {
          sign_hint = third;
        } else {
          Eigen::Index k = 0;
          axes.col(i).cwiseAbs().maxCoeff(&k);
          sign_hint = axes(k, i);
        }
      }
      if (sign_hint < 0.0) axes.col(i) = -axes.col(i);
    }
    if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
  }

  out.axes = axes;
  out.points.reserve(centered.size());
  const Mat3 to_local = axes.transpose();
  for (const auto& p : centered) out.points.push_back(to_local * p);
  return out;
}

std::vector<AlignedShape> align_sequence(std::span<const std::vector<Vec3>> frames) {
  std::vector<AlignedShape> out;
  std::optional<Mat3> prev;
  for (const auto& f : frames) {
    const std::vector<Vec3> c = center(f);
    out.push_back(canonicalize(c, prev));
    prev = out.back().axes;
  }
  return out;
}

}  // namespace occkit
