#pragma once

// Discrete-time drone/gimbal and lens dynamics, scripted targets and the
// noisy measurement channel.

#include "cinempc/geometry.hpp"
#include "cinempc/optics.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cinempc {

/// Position, velocity and camera orientation. The gimbal cancels body attitude,
/// so `rotation` is the world-from-camera rotation.
struct DroneState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Rotation rotation = Rotation::Identity();

  Pose pose() const { return {position, rotation}; }
};

struct DroneInput {
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();  // m/s^2, world frame
  Eigen::Vector3d gimbal_rate = Eigen::Vector3d::Zero();   // rad/s, camera frame

  bool operator==(const DroneInput&) const = default;
};

struct IntrinsicsInput {
  double focal_rate = 0.0;     // m/s
  double focus_rate = 0.0;     // m/s
  double aperture_rate = 0.0;  // f-stop/s

  bool operator==(const IntrinsicsInput&) const = default;
};

/// Admissible intrinsics (the lens range).
struct IntrinsicsBox {
  CameraIntrinsics lower{0.02, 0.5, 1.4};
  CameraIntrinsics upper{0.20, 100.0, 22.0};

  CameraIntrinsics clamp(const CameraIntrinsics& intr) const;
  bool contains(const CameraIntrinsics& intr) const;

  bool operator==(const IntrinsicsBox&) const = default;
};

/// Bit flags set by step_camera when a component hit the box.
enum ClampFlag : std::uint32_t {
  kClampNone = 0,
  kClampFocalLength = 1u << 0,
  kClampFocusDistance = 1u << 1,
  kClampAperture = 1u << 2,
};

struct CameraStep {
  CameraIntrinsics intrinsics;
  std::uint32_t clamped = kClampNone;
};

DroneState step_drone(const DroneState& state, const DroneInput& input, double dt);

/// Euler step followed by clamping into `box`.
CameraStep step_camera(const CameraIntrinsics& state, const IntrinsicsInput& input, double dt, const IntrinsicsBox& box);

struct Waypoint {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;  // rad

  bool operator==(const Waypoint&) const = default;
};

/// Named point on a target, offset vertically from its centroid (e.g. a face).
struct FeaturePoint {
  std::string name;
  double height_offset = 0.0;  // m

  bool operator==(const FeaturePoint&) const = default;
};

struct TargetScript {
  std::string id;
  std::vector<Waypoint> waypoints;  // strictly increasing times
  std::vector<FeaturePoint> features;

  bool operator==(const TargetScript&) const = default;
};

struct TargetState {
  std::string id;
  Pose pose;
};

/// Pose of one scripted target at time t: linear position interpolation,
/// shortest-arc yaw interpolation, held constant outside the script.
Pose scripted_pose(const TargetScript& script, double t);

std::vector<TargetState> step_targets(const std::vector<TargetScript>& scripts, double t);

/// Noisy target observation. Positions are corrupted, rotations exact.
struct TargetMeasurement {
  std::string id;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Rotation rotation = Rotation::Identity();
};

using Measurement = std::vector<TargetMeasurement>;

Measurement measure_targets(const std::vector<TargetState>& targets, double noise_sigma, std::mt19937_64& rng);

/// Seeded measurement channel; the sequence of measurements depends only on
/// the seed and the ground truth passed in.
class MeasurementChannel {
 public:
  MeasurementChannel(double noise_sigma, std::uint64_t seed) : sigma_(noise_sigma), rng_(seed) {}

  Measurement operator()(const std::vector<TargetState>& targets) { return measure_targets(targets, sigma_, rng_); }

 private:
  double sigma_;
  std::mt19937_64 rng_;
};

}  // namespace cinempc
