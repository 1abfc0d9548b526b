#include "cinempc/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cinempc {

CameraIntrinsics IntrinsicsBox::clamp(const CameraIntrinsics& intr) const {
  return {std::clamp(intr.focal_length, lower.focal_length, upper.focal_length),
          std::clamp(intr.focus_distance, lower.focus_distance, upper.focus_distance),
          std::clamp(intr.aperture, lower.aperture, upper.aperture)};
}

bool IntrinsicsBox::contains(const CameraIntrinsics& intr) const {
  return intr.focal_length >= lower.focal_length && intr.focal_length <= upper.focal_length &&
         intr.focus_distance >= lower.focus_distance && intr.focus_distance <= upper.focus_distance &&
         intr.aperture >= lower.aperture && intr.aperture <= upper.aperture;
}

DroneState step_drone(const DroneState& state, const DroneInput& input, double dt) {
  DroneState next;
  next.position = state.position + state.velocity * dt + 0.5 * dt * dt * input.acceleration;
  next.velocity = state.velocity + dt * input.acceleration;
  if (input.gimbal_rate.isZero(0.0)) {
    next.rotation = state.rotation;
  } else {
    next.rotation = state.rotation * exp_map(input.gimbal_rate, dt);
  }
  return next;
}

CameraStep step_camera(const CameraIntrinsics& state, const IntrinsicsInput& input, double dt, const IntrinsicsBox& box) {
  const CameraIntrinsics raw{state.focal_length + input.focal_rate * dt, state.focus_distance + input.focus_rate * dt,
                             state.aperture + input.aperture_rate * dt};
  CameraStep out{box.clamp(raw), kClampNone};
  if (out.intrinsics.focal_length != raw.focal_length) out.clamped |= kClampFocalLength;
  if (out.intrinsics.focus_distance != raw.focus_distance) out.clamped |= kClampFocusDistance;
  if (out.intrinsics.aperture != raw.aperture) out.clamped |= kClampAperture;
  return out;
}

Pose scripted_pose(const TargetScript& script, double t) {
  const auto& wps = script.waypoints;
  if (wps.empty()) throw std::invalid_argument("target '" + script.id + "' has no waypoints");
  auto pose_at = [](const Waypoint& w) { return Pose{w.position, yaw_rotation(w.yaw)}; };
  if (t <= wps.front().time) return pose_at(wps.front());
  if (t >= wps.back().time) return pose_at(wps.back());

  const auto next = std::upper_bound(wps.begin(), wps.end(), t, [](double v, const Waypoint& w) { return v < w.time; });
  const Waypoint& b = *next;
  const Waypoint& a = *(next - 1);
  const double s = (t - a.time) / (b.time - a.time);
  const double yaw = a.yaw + s * wrap_angle(b.yaw - a.yaw);
  return {a.position + s * (b.position - a.position), yaw_rotation(yaw)};
}

std::vector<TargetState> step_targets(const std::vector<TargetScript>& scripts, double t) {
  std::vector<TargetState> out;
  out.reserve(scripts.size());
  for (const auto& s : scripts) out.push_back({s.id, scripted_pose(s, t)});
  return out;
}

Measurement measure_targets(const std::vector<TargetState>& targets, double noise_sigma, std::mt19937_64& rng) {
  if (noise_sigma < 0) throw std::invalid_argument("noise sigma must be non-negative");
  Measurement out;
  out.reserve(targets.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& t : targets) {
    TargetMeasurement m{t.id, t.pose.position, t.pose.rotation};
    if (noise_sigma > 0) {
      for (int i = 0; i < 3; ++i) m.position[i] += noise_sigma * noise(rng);
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cinempc
