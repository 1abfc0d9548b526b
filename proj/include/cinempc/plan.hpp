#pragma once

// Control plans over the prediction horizon and their single-shooting rollout.

#include "cinempc/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace cinempc {

/// Joint drone + lens state along a predicted trajectory.
struct PlanState {
  DroneState drone;
  CameraIntrinsics intrinsics;
  std::uint32_t clamped = kClampNone;
};

/// N+1 drone inputs and N+1 lens-rate inputs.
struct ControlPlan {
  std::vector<DroneInput> drone_inputs;
  std::vector<IntrinsicsInput> camera_inputs;

  static ControlPlan zero(int horizon);

  /// Number of slots (N+1).
  int size() const { return static_cast<int>(drone_inputs.size()); }

  bool operator==(const ControlPlan&) const = default;
};

/// Decision-vector layout: per slot [acceleration(3), gimbal_rate(3),
/// focal_rate, focus_rate, aperture_rate].
inline constexpr int kInputsPerSlot = 9;

Eigen::VectorXd flatten(const ControlPlan& plan);
ControlPlan unflatten(const Eigen::VectorXd& z);

/// Applies each input in turn from (drone, intrinsics). Element i is the state
/// after input i, so the result has plan.size() entries.
std::vector<PlanState> rollout(const DroneState& drone, const CameraIntrinsics& intrinsics, const ControlPlan& plan,
                               double dt, const IntrinsicsBox& box);

}  // namespace cinempc
