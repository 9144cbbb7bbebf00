#pragma once

#include <Eigen/Core>

namespace occkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid SE(3) transform x -> R*x + t.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  // Yaw about +z, then translation.
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  // Intrinsic Z-Y-X (yaw, pitch, roll).
  static Pose from_euler(double roll, double pitch, double yaw, const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& x) const { return rotation_ * x + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }
  Vec3 operator*(const Vec3& x) const { return apply(x); }

  // (this * other)(x) == this(other(x))
  Pose compose(const Pose& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }
  Pose operator*(const Pose& other) const { return compose(other); }

  Pose inverse() const {
    const Mat3 rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  // R^T R = I and det R = +1 within tol, all entries finite.
  bool is_valid(double tol = 1e-9) const;
  // Throws Error(SingularPose) when !is_valid().
  void validate(const char* what = "pose") const;

  double yaw() const;

  bool operator==(const Pose& other) const {
    return rotation_ == other.rotation_ && translation_ == other.translation_;
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

bool approx_equal(const Pose& a, const Pose& b, double tol);

}  // namespace occkit
