#include "occkit/pose.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <string>

#include "occkit/error.hpp"

namespace occkit {

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  return {Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(), t};
}

Pose Pose::from_euler(double roll, double pitch, double yaw, const Vec3& t) {
  const Mat3 r = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                  Eigen::AngleAxisd(roll, Vec3::UnitX()))
                     .toRotationMatrix();
  return {r, t};
}

bool Pose::is_valid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const Mat3 gram = rotation_.transpose() * rotation_;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation_.determinant() - 1.0) <= tol;
}

void Pose::validate(const char* what) const {
  if (!is_valid()) {
    throw Error(ErrorCode::SingularPose, std::string(what) + " rotation is not a proper orthonormal matrix");
  }
}

double Pose::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

bool approx_equal(const Pose& a, const Pose& b, double tol) {
  return (a.rotation() - b.rotation()).cwiseAbs().maxCoeff() <= tol &&
         (a.translation() - b.translation()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace occkit
