#include "cinempc/plan.hpp"

#include <stdexcept>

namespace cinempc {

ControlPlan ControlPlan::zero(int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  return {std::vector<DroneInput>(horizon + 1), std::vector<IntrinsicsInput>(horizon + 1)};
}

Eigen::VectorXd flatten(const ControlPlan& plan) {
  if (plan.drone_inputs.size() != plan.camera_inputs.size()) throw std::invalid_argument("plan: mismatched input sequences");
  Eigen::VectorXd z(kInputsPerSlot * plan.size());
  for (int k = 0; k < plan.size(); ++k) {
    auto slot = z.segment<kInputsPerSlot>(kInputsPerSlot * k);
    slot.head<3>() = plan.drone_inputs[k].acceleration;
    slot.segment<3>(3) = plan.drone_inputs[k].gimbal_rate;
    slot[6] = plan.camera_inputs[k].focal_rate;
    slot[7] = plan.camera_inputs[k].focus_rate;
    slot[8] = plan.camera_inputs[k].aperture_rate;
  }
  return z;
}

ControlPlan unflatten(const Eigen::VectorXd& z) {
  if (z.size() % kInputsPerSlot != 0) throw std::invalid_argument("plan vector length is not a multiple of the slot size");
  const int slots = static_cast<int>(z.size() / kInputsPerSlot);
  ControlPlan plan{std::vector<DroneInput>(slots), std::vector<IntrinsicsInput>(slots)};
  for (int k = 0; k < slots; ++k) {
    const auto slot = z.segment<kInputsPerSlot>(kInputsPerSlot * k);
    plan.drone_inputs[k] = {slot.head<3>(), slot.segment<3>(3)};
    plan.camera_inputs[k] = {slot[6], slot[7], slot[8]};
  }
  return plan;
}

std::vector<PlanState> rollout(const DroneState& drone, const CameraIntrinsics& intrinsics, const ControlPlan& plan,
                               double dt, const IntrinsicsBox& box) {
  if (plan.drone_inputs.size() != plan.camera_inputs.size()) throw std::invalid_argument("plan: mismatched input sequences");
  std::vector<PlanState> states;
  states.reserve(plan.size());
  DroneState d = drone;
  CameraIntrinsics c = intrinsics;
  for (int k = 0; k < plan.size(); ++k) {
    d = step_drone(d, plan.drone_inputs[k], dt);
    const CameraStep cs = step_camera(c, plan.camera_inputs[k], dt, box);
    c = cs.intrinsics;
    states.push_back({d, c, cs.clamped});
  }
  return states;
}

}  // namespace cinempc
