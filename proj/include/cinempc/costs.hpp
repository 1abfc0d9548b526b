#pragma once

// Shot directives and the depth-of-field, composition and canonical-shot cost
// terms, plus the horizon objective and its adjoint gradient.

#include "cinempc/geometry.hpp"
#include "cinempc/optics.hpp"
#include "cinempc/plan.hpp"
#include "cinempc/world.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cinempc {

/// Desired near or far limit: a fixed distance, or the live depth of a target
/// when `target` is non-empty.
struct DistanceGoal {
  std::optional<double> meters;
  std::string target;
  double weight = 0.0;

  bool operator==(const DistanceGoal&) const = default;
};

struct ImageGoal {
  std::string target;
  std::string feature;  // empty: target centroid
  Eigen::Vector2d point = Eigen::Vector2d::Zero();  // px
  double weight = 0.0;

  bool operator==(const ImageGoal&) const = default;
};

struct DepthGoal {
  std::string target;
  double depth = 0.0;  // m
  double weight = 0.0;

  bool operator==(const DepthGoal&) const = default;
};

struct OrientationGoal {
  std::string target;
  Rotation relative = Rotation::Identity();  // desired camera-from-target rotation
  double weight = 0.0;
  // Set when the goal was given as a relative yaw; `relative` is derived from it.
  std::optional<double> relative_yaw;

  static OrientationGoal from_yaw(std::string target, double relative_yaw, double weight) {
    return {std::move(target), relative_rotation_from_yaw(relative_yaw), weight, relative_yaw};
  }

  bool operator==(const OrientationGoal&) const = default;
};

/// Artistic directive for one sequence, referring to targets by id.
struct ShotDirective {
  std::optional<DistanceGoal> near;
  std::optional<DistanceGoal> far;
  std::vector<ImageGoal> image;
  std::vector<DepthGoal> depth;
  std::vector<OrientationGoal> orientation;

  bool operator==(const ShotDirective&) const = default;
};

/// A directive with every target reference replaced by world-frame numbers,
/// frozen for one prediction horizon.
struct ShotObjective {
  std::optional<double> desired_near;
  std::optional<double> desired_far;
  double near_weight = 0.0;
  double far_weight = 0.0;

  struct ImageTerm {
    Eigen::Vector3d point;
    Eigen::Vector2d desired;
    double weight;
  };
  struct DepthTerm {
    Eigen::Vector3d point;
    double desired;
    double weight;
  };
  struct OrientationTerm {
    Rotation target_rotation;
    Rotation desired_relative;
    double weight;
  };

  std::vector<ImageTerm> image;
  std::vector<DepthTerm> depth;
  std::vector<OrientationTerm> orientation;
};

/// Resolves target references against a measurement. Depth anchors use the
/// axial depth of the measured target centroid as seen from `camera`.
ShotObjective resolve(const ShotDirective& directive, const Measurement& measurement,
                      std::span<const TargetScript> targets, const Pose& camera);

struct CostOptions {
  double behind_camera_penalty = 1e8;
  double far_saturation = 1e3;  // m

  bool operator==(const CostOptions&) const = default;
};

struct CostBreakdown {
  double j_dof = 0.0;
  double j_im = 0.0;
  double j_p = 0.0;
  double total = 0.0;
  int behind_camera = 0;  // weighted terms that hit the penalty

  CostBreakdown& operator+=(const CostBreakdown& o);
};

/// Far limit as seen by the depth-of-field term: D for D << limit, `limit`
/// at infinity. Smooth and monotone in 1/D.
double saturate_far(double distance, double limit);

/// saturate_far of the lens's far limit, continued smoothly past the
/// hyperfocal distance where it exceeds `limit`.
double saturated_far(const CameraIntrinsics& intr, const LensConstants& lens, double limit);

double j_dof(const CameraIntrinsics& intr, const LensConstants& lens, const ShotObjective& shot,
             const CostOptions& options = {});
double j_im(const Pose& camera, double focal_length, const LensConstants& lens, const ShotObjective& shot,
            const CostOptions& options = {}, int* behind_camera = nullptr);
double j_p(const Pose& camera, const ShotObjective& shot, const CostOptions& options = {},
           int* behind_camera = nullptr);

CostBreakdown stage_cost(const Pose& camera, const CameraIntrinsics& intr, const LensConstants& lens,
                         const ShotObjective& shot, const CostOptions& options = {});

/// Gradient of stage_cost with respect to camera position, the nine entries of
/// the camera rotation, and (focal_length, focus_distance, aperture).
struct StageGradient {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Zero();
  Eigen::Vector3d intrinsics = Eigen::Vector3d::Zero();
};

CostBreakdown stage_cost_gradient(const Pose& camera, const CameraIntrinsics& intr, const LensConstants& lens,
                                  const ShotObjective& shot, const CostOptions& options, StageGradient& grad);

struct HorizonCost {
  CostBreakdown sum;
  std::vector<CostBreakdown> per_step;
};

HorizonCost total_cost(std::span<const PlanState> states, const LensConstants& lens, const ShotObjective& shot,
                       const CostOptions& options = {});

/// Everything the horizon objective needs besides the plan itself.
struct PlanningProblem {
  DroneState drone;
  CameraIntrinsics intrinsics;
  LensConstants lens;
  ShotObjective shot;
  IntrinsicsBox box;
  double dt = 0.2;
  CostOptions options;

  // Positions to keep clear of (the measured targets).
  std::vector<Eigen::Vector3d> obstacles;
  double min_distance = 1.5;        // m
  double collision_weight = 1e6;     // also applied to workspace excursions
  double intrinsics_weight = 1e4;   // on would-be clamping of the lens state
  Eigen::Vector3d workspace_lower = Eigen::Vector3d::Constant(-1e4);
  Eigen::Vector3d workspace_upper = Eigen::Vector3d::Constant(1e4);

  // Per-component weights on squared inputs, in the flatten() slot layout.
  Eigen::Matrix<double, kInputsPerSlot, 1> effort = Eigen::Matrix<double, kInputsPerSlot, 1>::Zero();
};

struct PlanEvaluation {
  CostBreakdown cost;
  double intrinsics_penalty = 0.0;
  double collision_penalty = 0.0;  // target clearance and workspace bounds
  double effort_penalty = 0.0;
  std::vector<CostBreakdown> per_step;

  double objective() const { return cost.total + intrinsics_penalty + collision_penalty + effort_penalty; }
};

/// Horizon cost plus constraint penalties for a plan.
PlanEvaluation evaluate_plan(const PlanningProblem& problem, const ControlPlan& plan);

/// Gradient of evaluate_plan(...).objective() with respect to the flattened
/// plan (see flatten()). Optionally returns the evaluation computed on the way.
Eigen::VectorXd cost_gradient(const PlanningProblem& problem, const ControlPlan& plan,
                              PlanEvaluation* evaluation = nullptr);

}  // namespace cinempc
