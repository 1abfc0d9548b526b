#pragma once

// Rigid-body and camera geometry.
//
// Frames: world is z-up. The camera frame is x right, y down, z forward, and a
// pose rotation maps camera (or target body) coordinates into the world.
// Target bodies use x forward, y left, z up.

#include "cinempc/optics.hpp"

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cinempc {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Rotation = Eigen::Matrix3d;

template <typename Scalar>
struct PoseT {
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
};
using Pose = PoseT<double>;

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;

  Eigen::Vector2d vec() const { return {u, v}; }
};

/// Thrown when a point that must be imaged lies at or behind the image plane.
class BehindCameraError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& w) {
  Matrix3<typename Derived::Scalar> W;
  W << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return W;
}

/// Inverse of skew(): the axial vector of the antisymmetric part of M
/// (scaled by 2 for an exactly skew-symmetric matrix input).
template <typename Derived>
Vector3<typename Derived::Scalar> vee_antisymmetric(const Eigen::MatrixBase<Derived>& M) {
  return {M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1)};
}

/// Rodrigues formula for exp(skew(omega * dt)).
template <typename Derived>
Matrix3<typename Derived::Scalar> exp_map(const Eigen::MatrixBase<Derived>& omega, typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vector3<Scalar> phi = omega * dt;
  const Scalar theta2 = phi.squaredNorm();
  const Matrix3<Scalar> W = skew(phi);
  if (theta2 < Scalar(1e-20)) {
    return Matrix3<Scalar>::Identity() + W + Scalar(0.5) * W * W;
  }
  const Scalar theta = sqrt(theta2);
  return Matrix3<Scalar>::Identity() + (sin(theta) / theta) * W + ((Scalar(1) - cos(theta)) / theta2) * W * W;
}

/// Right Jacobian of SO(3): exp(phi + d) ~= exp(phi) exp(J_r(phi) d).
template <typename Derived>
Matrix3<typename Derived::Scalar> right_jacobian(const Eigen::MatrixBase<Derived>& phi) {
  using Scalar = typename Derived::Scalar;
  const Scalar theta2 = phi.squaredNorm();
  const Matrix3<Scalar> W = skew(phi);
  if (theta2 < Scalar(1e-12)) {
    return Matrix3<Scalar>::Identity() - Scalar(0.5) * W + (W * W) / Scalar(6);
  }
  const Scalar theta = std::sqrt(theta2);
  return Matrix3<Scalar>::Identity() - ((Scalar(1) - std::cos(theta)) / theta2) * W +
         ((theta - std::sin(theta)) / (theta2 * theta)) * W * W;
}

/// Rotation about world z by `yaw` radians.
inline Rotation yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

/// Camera axes expressed in a level body frame (x forward, y left, z up):
/// camera z looks along body x, camera x points to body -y, camera y to -z.
inline Rotation camera_mount() {
  Rotation C;
  C << 0, 0, 1,  //
      -1, 0, 0,  //
      0, -1, 0;
  return C;
}

/// World-from-camera rotation for a camera with the given heading and pitch
/// (positive pitch looks up).
inline Rotation camera_rotation(double yaw, double pitch = 0.0) {
  return yaw_rotation(yaw) * Eigen::AngleAxisd(-pitch, Eigen::Vector3d::UnitY()).toRotationMatrix() * camera_mount();
}

/// Camera-from-target rotation for a level camera whose heading differs from
/// the target's by `relative_yaw` (0 films the target from behind, pi from the
/// front).
inline Rotation relative_rotation_from_yaw(double relative_yaw) {
  return camera_mount().transpose() * yaw_rotation(relative_yaw);
}

/// Camera-frame position of a world point: R^T (p_t - p_d).
template <typename Scalar>
Vector3<Scalar> relative_position(const PoseT<Scalar>& camera, const Vector3<Scalar>& target_position) {
  return camera.rotation.transpose() * (target_position - camera.position);
}

template <typename Scalar>
Matrix3<Scalar> calibration_matrix(Scalar focal_length, const LensConstants& lens) {
  const Scalar bf = Scalar(lens.beta()) * focal_length;
  Matrix3<Scalar> K;
  K << bf, Scalar(lens.skew), Scalar(lens.principal_point.x()),  //
      0, bf, Scalar(lens.principal_point.y()),                    //
      0, 0, 1;
  return K;
}

/// Perspective projection of a camera-frame point.
inline ImagePoint project(const Eigen::Vector3d& p_cam, double focal_length, const LensConstants& lens) {
  if (!(p_cam.z() > 0)) throw BehindCameraError("project: point is not in front of the camera");
  const Eigen::Vector3d h = calibration_matrix(focal_length, lens) * p_cam;
  return {h.x() / h.z(), h.y() / h.z()};
}

/// Camera-from-target rotation R_d^T R_t.
inline Rotation relative_rotation(const Pose& camera, const Pose& target) {
  return camera.rotation.transpose() * target.rotation;
}

/// Axial depth of a camera-frame point.
inline double target_depth(const Eigen::Vector3d& p_cam) {
  if (!(p_cam.z() > 0)) throw BehindCameraError("target_depth: point is not in front of the camera");
  return p_cam.z();
}

/// Chordal distance ||R^T R* - I||_F. Ranges over [0, 2 sqrt(2)].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rotation_distance(const Eigen::MatrixBase<DerivedA>& R, const Eigen::MatrixBase<DerivedB>& R_star) {
  using Scalar = typename DerivedA::Scalar;
  return (R.transpose() * R_star - Matrix3<Scalar>::Identity()).norm();
}

/// Nearest rotation in the Frobenius sense.
inline Rotation orthonormalize(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d U = svd.matrixU();
    U.col(2) *= -1;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

/// Heading of a rotation's forward axis projected on the ground plane.
/// `forward` selects the axis (camera z or body x).
inline double heading(const Rotation& R, const Eigen::Vector3d& forward) {
  const Eigen::Vector3d d = R * forward;
  return std::atan2(d.y(), d.x());
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace cinempc
