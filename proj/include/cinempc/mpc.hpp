#pragma once

// Receding-horizon controller: single-shooting transcription of the horizon
// problem, solved by projected L-BFGS and warm-started from the shifted
// previous plan.

#include "cinempc/box_lbfgs.hpp"
#include "cinempc/costs.hpp"
#include "cinempc/plan.hpp"
#include "cinempc/world.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace cinempc {

using SlotVector = Eigen::Matrix<double, kInputsPerSlot, 1>;

/// Per-slot input bounds, in the flatten() layout.
struct InputBox {
  SlotVector lower;
  SlotVector upper;

  static InputBox symmetric(double acceleration, double gimbal_rate, double focal_rate, double focus_rate,
                            double aperture_rate);

  bool contains(const ControlPlan& plan) const;
  ControlPlan project(const ControlPlan& plan) const;

  bool operator==(const InputBox&) const = default;
};

struct SolverConfig {
  int horizon = 10;
  int max_iterations = 150;
  double gradient_tolerance = 1e-6;
  int memory = 8;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;

  InputBox inputs = InputBox::symmetric(3.0, 1.0, 0.01, 5.0, 4.0);
  IntrinsicsBox intrinsics;
  Eigen::Vector3d workspace_lower = Eigen::Vector3d::Constant(-1e4);
  Eigen::Vector3d workspace_upper = Eigen::Vector3d::Constant(1e4);
  double min_target_distance = 1.5;
  double collision_weight = 1e6;
  double intrinsics_weight = 1e4;
  // Weight on squared inputs, each normalized by its bound.
  double effort_weight = 1e-3;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  bool operator==(const SolverConfig&) const = default;
};

struct ConstraintReport {
  double intrinsics_penalty = 0.0;
  double collision_penalty = 0.0;
  double effort_penalty = 0.0;
  int behind_camera = 0;
  bool initial_state_projected = false;
  bool warm_start_projected = false;
};

struct SolveResult {
  ControlPlan plan;
  CostBreakdown cost;
  double objective = 0.0;  // cost.total plus penalties
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double projected_gradient = 0.0;
  ConstraintReport constraints;
};

/// Builds the horizon problem from the current state and a resolved shot.
PlanningProblem make_problem(const DroneState& drone, const CameraIntrinsics& intrinsics, const LensConstants& lens,
                             const ShotObjective& shot, const Measurement& measurement, double dt,
                             const SolverConfig& cfg);

/// Minimizes the horizon objective starting from `warm`. The returned
/// objective never exceeds the warm plan's.
SolveResult solve(PlanningProblem problem, const ControlPlan& warm, const SolverConfig& cfg);

/// [u_0..u_N] -> [u_1..u_N, u_N].
ControlPlan shift_warm_start(const ControlPlan& prev);

struct ControlOutput {
  DroneInput drone_input;
  IntrinsicsInput camera_input;
  ShotObjective shot;
  SolveResult result;
};

/// Closed-loop MPC: solves each tick, applies the first input and keeps the
/// shifted plan as the next warm start.
class Controller {
 public:
  Controller(LensConstants lens, SolverConfig cfg, double dt, std::vector<TargetScript> targets = {});

  ControlOutput control_step(const DroneState& drone, const CameraIntrinsics& intrinsics,
                             const Measurement& measurement, const ShotDirective& directive);

  const ControlPlan& warm_start() const { return warm_; }
  void reset() { warm_ = ControlPlan::zero(cfg_.horizon); }
  const SolverConfig& config() const { return cfg_; }

 private:
  LensConstants lens_;
  SolverConfig cfg_;
  double dt_;
  std::vector<TargetScript> targets_;
  ControlPlan warm_;
};

}  // namespace cinempc
