#include "cinempc/costs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cinempc {

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& o) {
  j_dof += o.j_dof;
  j_im += o.j_im;
  j_p += o.j_p;
  total += o.total;
  behind_camera += o.behind_camera;
  return *this;
}

namespace {

const TargetMeasurement& find_measured(const Measurement& m, const std::string& id) {
  for (const auto& t : m) {
    if (t.id == id) return t;
  }
  throw std::invalid_argument("directive references unknown target '" + id + "'");
}

double feature_offset(std::span<const TargetScript> targets, const std::string& id, const std::string& feature) {
  if (feature.empty()) return 0.0;
  for (const auto& t : targets) {
    if (t.id != id) continue;
    for (const auto& f : t.features) {
      if (f.name == feature) return f.height_offset;
    }
    throw std::invalid_argument("target '" + id + "' has no feature '" + feature + "'");
  }
  throw std::invalid_argument("directive references unknown target '" + id + "'");
}

// Anchored distances never resolve closer than this; the optics are singular
// near the focal length.
constexpr double kMinAnchoredDistance = 0.1;

std::optional<double> resolve_distance(const DistanceGoal& goal, const Measurement& m, const Pose& camera) {
  if (!goal.target.empty()) {
    const double z = relative_position(camera, find_measured(m, goal.target).position).z();
    return std::max(z, kMinAnchoredDistance);
  }
  return goal.meters;
}

}  // namespace

ShotObjective resolve(const ShotDirective& directive, const Measurement& measurement,
                      std::span<const TargetScript> targets, const Pose& camera) {
  ShotObjective shot;
  if (directive.near) {
    shot.desired_near = resolve_distance(*directive.near, measurement, camera);
    shot.near_weight = shot.desired_near ? directive.near->weight : 0.0;
  }
  if (directive.far) {
    shot.desired_far = resolve_distance(*directive.far, measurement, camera);
    shot.far_weight = shot.desired_far ? directive.far->weight : 0.0;
  }
  for (const auto& g : directive.image) {
    Eigen::Vector3d p = find_measured(measurement, g.target).position;
    p.z() += feature_offset(targets, g.target, g.feature);
    shot.image.push_back({p, g.point, g.weight});
  }
  for (const auto& g : directive.depth) {
    shot.depth.push_back({find_measured(measurement, g.target).position, g.depth, g.weight});
  }
  for (const auto& g : directive.orientation) {
    shot.orientation.push_back({find_measured(measurement, g.target).rotation, g.relative, g.weight});
  }
  return shot;
}

namespace {

// L phi(L u) with phi(x) = (sqrt(x^2 + 4) - x) / 2 and u the reciprocal far
// limit: ~1/u for nearby limits, L at the hyperfocal distance, and still
// increasing past it so the gradient never vanishes.
double saturate_inverse(double u, double limit) {
  const double x = limit * u;
  return 0.5 * limit * (std::sqrt(x * x + 4.0) - x);
}

double saturate_inverse_slope(double u, double limit) {
  const double x = limit * u;
  return 0.5 * limit * limit * (x / std::sqrt(x * x + 4.0) - 1.0);
}

}  // namespace

double saturate_far(double distance, double limit) {
  if (std::isinf(distance)) return limit;
  return saturate_inverse(1.0 / distance, limit);
}

double saturated_far(const CameraIntrinsics& intr, const LensConstants& lens, double limit) {
  return saturate_inverse(inverse_far_distance(intr, lens), limit);
}

namespace {

// Shared implementation of the three terms. With Grad = false the gradient
// argument is ignored.
template <bool Grad>
double dof_term(const CameraIntrinsics& intr, const LensConstants& lens, const ShotObjective& shot,
                const CostOptions& options, Eigen::Vector3d* grad) {
  double cost = 0.0;
  if (shot.desired_near && shot.near_weight > 0) {
    const double err = near_distance(intr, lens) - *shot.desired_near;
    cost += shot.near_weight * err * err;
    if constexpr (Grad) *grad += 2.0 * shot.near_weight * err * near_partials(intr, lens);
  }
  if (shot.desired_far && shot.far_weight > 0) {
    const double limit = options.far_saturation;
    const double u = inverse_far_distance(intr, lens);
    const double err = saturate_inverse(u, limit) - saturate_far(*shot.desired_far, limit);
    cost += shot.far_weight * err * err;
    if constexpr (Grad) {
      *grad += 2.0 * shot.far_weight * err * saturate_inverse_slope(u, limit) * inverse_far_partials(intr, lens);
    }
  }
  return cost;
}

template <bool Grad>
double image_term(const Pose& camera, double focal_length, const LensConstants& lens, const ShotObjective& shot,
                  const CostOptions& options, int& behind, StageGradient* grad) {
  const double beta = lens.beta();
  const double bf = beta * focal_length;
  const double s = lens.skew;
  double cost = 0.0;
  for (const auto& term : shot.image) {
    if (!(term.weight > 0)) continue;
    const Eigen::Vector3d d = term.point - camera.position;
    const Eigen::Vector3d pc = camera.rotation.transpose() * d;
    if (!(pc.z() > 0)) {
      cost += options.behind_camera_penalty;
      ++behind;
      continue;
    }
    const double iz = 1.0 / pc.z();
    const double u = lens.principal_point.x() + (bf * pc.x() + s * pc.y()) * iz;
    const double v = lens.principal_point.y() + bf * pc.y() * iz;
    const double eu = u - term.desired.x();
    const double ev = v - term.desired.y();
    cost += term.weight * (eu * eu + ev * ev);
    if constexpr (Grad) {
      const Eigen::Vector3d du(bf * iz, s * iz, -(bf * pc.x() + s * pc.y()) * iz * iz);
      const Eigen::Vector3d dv(0.0, bf * iz, -bf * pc.y() * iz * iz);
      const Eigen::Vector3d g_pc = 2.0 * term.weight * (eu * du + ev * dv);
      grad->position -= camera.rotation * g_pc;
      grad->rotation += d * g_pc.transpose();
      grad->intrinsics.x() += 2.0 * term.weight * (eu * beta * pc.x() * iz + ev * beta * pc.y() * iz);
    }
  }
  return cost;
}

template <bool Grad>
double shot_term(const Pose& camera, const ShotObjective& shot, const CostOptions& options, int& behind,
                 StageGradient* grad) {
  double cost = 0.0;
  for (const auto& term : shot.depth) {
    if (!(term.weight > 0)) continue;
    const Eigen::Vector3d d = term.point - camera.position;
    const Eigen::Vector3d pc = camera.rotation.transpose() * d;
    if (!(pc.z() > 0)) {
      cost += options.behind_camera_penalty;
      ++behind;
      continue;
    }
    const double err = pc.z() - term.desired;
    cost += term.weight * err * err;
    if constexpr (Grad) {
      const Eigen::Vector3d g_pc(0.0, 0.0, 2.0 * term.weight * err);
      grad->position -= camera.rotation * g_pc;
      grad->rotation += d * g_pc.transpose();
    }
  }
  for (const auto& term : shot.orientation) {
    if (!(term.weight > 0)) continue;
    // ||R_dt^T R* - I||^2 with R_dt = R^T R_t, i.e. ||R_t^T R R* - I||^2.
    const Eigen::Matrix3d D =
        term.target_rotation.transpose() * camera.rotation * term.desired_relative - Eigen::Matrix3d::Identity();
    cost += term.weight * D.squaredNorm();
    if constexpr (Grad) {
      grad->rotation += 2.0 * term.weight * term.target_rotation * D * term.desired_relative.transpose();
    }
  }
  return cost;
}

template <bool Grad>
CostBreakdown stage(const Pose& camera, const CameraIntrinsics& intr, const LensConstants& lens,
                    const ShotObjective& shot, const CostOptions& options, StageGradient* grad) {
  CostBreakdown c;
  c.j_dof = dof_term<Grad>(intr, lens, shot, options, Grad ? &grad->intrinsics : nullptr);
  c.j_im = image_term<Grad>(camera, intr.focal_length, lens, shot, options, c.behind_camera, grad);
  c.j_p = shot_term<Grad>(camera, shot, options, c.behind_camera, grad);
  c.total = c.j_dof + c.j_im + c.j_p;
  return c;
}

}  // namespace

double j_dof(const CameraIntrinsics& intr, const LensConstants& lens, const ShotObjective& shot,
             const CostOptions& options) {
  return dof_term<false>(intr, lens, shot, options, nullptr);
}

double j_im(const Pose& camera, double focal_length, const LensConstants& lens, const ShotObjective& shot,
            const CostOptions& options, int* behind_camera) {
  int behind = 0;
  const double c = image_term<false>(camera, focal_length, lens, shot, options, behind, nullptr);
  if (behind_camera) *behind_camera = behind;
  return c;
}

double j_p(const Pose& camera, const ShotObjective& shot, const CostOptions& options, int* behind_camera) {
  int behind = 0;
  const double c = shot_term<false>(camera, shot, options, behind, nullptr);
  if (behind_camera) *behind_camera = behind;
  return c;
}

CostBreakdown stage_cost(const Pose& camera, const CameraIntrinsics& intr, const LensConstants& lens,
                         const ShotObjective& shot, const CostOptions& options) {
  return stage<false>(camera, intr, lens, shot, options, nullptr);
}

CostBreakdown stage_cost_gradient(const Pose& camera, const CameraIntrinsics& intr, const LensConstants& lens,
                                  const ShotObjective& shot, const CostOptions& options, StageGradient& grad) {
  grad = StageGradient{};
  return stage<true>(camera, intr, lens, shot, options, &grad);
}

HorizonCost total_cost(std::span<const PlanState> states, const LensConstants& lens, const ShotObjective& shot,
                       const CostOptions& options) {
  HorizonCost out;
  out.per_step.reserve(states.size());
  for (const auto& s : states) {
    out.per_step.push_back(stage_cost(s.drone.pose(), s.intrinsics, lens, shot, options));
    out.sum += out.per_step.back();
  }
  return out;
}

namespace {

// Forward pass that keeps what the adjoint sweep needs.
struct Trajectory {
  std::vector<PlanState> states;                   // after each input
  std::vector<Eigen::Vector3d> raw_intrinsics;     // before clamping
  std::vector<Eigen::Matrix3d> increments;         // exp(gimbal_rate dt)
};

Eigen::Vector3d as_vector(const CameraIntrinsics& c) { return {c.focal_length, c.focus_distance, c.aperture}; }

Trajectory simulate(const PlanningProblem& problem, const ControlPlan& plan) {
  const int n = plan.size();
  if (n < 1 || static_cast<int>(plan.camera_inputs.size()) != n) throw std::invalid_argument("plan: invalid size");
  Trajectory tr;
  tr.states.reserve(n);
  tr.raw_intrinsics.reserve(n);
  tr.increments.reserve(n);
  const double dt = problem.dt;
  DroneState d = problem.drone;
  CameraIntrinsics c = problem.intrinsics;
  for (int k = 0; k < n; ++k) {
    const DroneInput& u = plan.drone_inputs[k];
    const Eigen::Matrix3d E = u.gimbal_rate.isZero(0.0) ? Eigen::Matrix3d::Identity() : exp_map(u.gimbal_rate, dt);
    DroneState next;
    next.position = d.position + d.velocity * dt + 0.5 * dt * dt * u.acceleration;
    next.velocity = d.velocity + dt * u.acceleration;
    next.rotation = d.rotation * E;
    d = next;

    const CameraStep cs = step_camera(c, plan.camera_inputs[k], dt, problem.box);
    const IntrinsicsInput& r = plan.camera_inputs[k];
    tr.raw_intrinsics.emplace_back(c.focal_length + r.focal_rate * dt, c.focus_distance + r.focus_rate * dt,
                                   c.aperture + r.aperture_rate * dt);
    c = cs.intrinsics;
    tr.states.push_back({d, c, cs.clamped});
    tr.increments.push_back(E);
  }
  return tr;
}

double collision_penalty(const PlanningProblem& problem, const Eigen::Vector3d& p, Eigen::Vector3d* grad) {
  double pen = 0.0;
  for (const auto& q : problem.obstacles) {
    const Eigen::Vector3d diff = p - q;
    const double dist = diff.norm();
    const double gap = problem.min_distance - dist;
    if (gap <= 0) continue;
    pen += problem.collision_weight * gap * gap;
    if (grad && dist > 0) *grad -= (2.0 * problem.collision_weight * gap / dist) * diff;
  }
  const Eigen::Vector3d below = (problem.workspace_lower - p).cwiseMax(0.0);
  const Eigen::Vector3d above = (p - problem.workspace_upper).cwiseMax(0.0);
  pen += problem.collision_weight * (below.squaredNorm() + above.squaredNorm());
  if (grad) *grad += 2.0 * problem.collision_weight * (above - below);
  return pen;
}

PlanEvaluation evaluate_trajectory(const PlanningProblem& problem, const ControlPlan& plan, const Trajectory& tr) {
  PlanEvaluation ev;
  const Eigen::VectorXd z = flatten(plan);
  ev.per_step.reserve(tr.states.size());
  const Eigen::Vector3d lo = as_vector(problem.box.lower);
  const Eigen::Vector3d hi = as_vector(problem.box.upper);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const PlanState& s = tr.states[k];
    ev.per_step.push_back(stage_cost(s.drone.pose(), s.intrinsics, problem.lens, problem.shot, problem.options));
    ev.cost += ev.per_step.back();
    const Eigen::Vector3d& raw = tr.raw_intrinsics[k];
    const Eigen::Vector3d viol = raw - raw.cwiseMax(lo).cwiseMin(hi);
    ev.intrinsics_penalty += problem.intrinsics_weight * viol.squaredNorm();
    ev.collision_penalty += collision_penalty(problem, s.drone.position, nullptr);
    const auto u = z.segment<kInputsPerSlot>(kInputsPerSlot * static_cast<Eigen::Index>(k));
    ev.effort_penalty += problem.effort.dot(u.cwiseAbs2());
  }
  return ev;
}

}  // namespace

PlanEvaluation evaluate_plan(const PlanningProblem& problem, const ControlPlan& plan) {
  return evaluate_trajectory(problem, plan, simulate(problem, plan));
}

Eigen::VectorXd cost_gradient(const PlanningProblem& problem, const ControlPlan& plan, PlanEvaluation* evaluation) {
  const Trajectory tr = simulate(problem, plan);
  if (evaluation) *evaluation = evaluate_trajectory(problem, plan, tr);

  const int n = plan.size();
  const double dt = problem.dt;
  const Eigen::Vector3d lo = as_vector(problem.box.lower);
  const Eigen::Vector3d hi = as_vector(problem.box.upper);
  Eigen::VectorXd grad(kInputsPerSlot * n);

  // Adjoints of the state after input k, accumulated backwards.
  Eigen::Vector3d adj_p = Eigen::Vector3d::Zero();
  Eigen::Vector3d adj_v = Eigen::Vector3d::Zero();
  Eigen::Matrix3d adj_R = Eigen::Matrix3d::Zero();
  Eigen::Vector3d adj_c = Eigen::Vector3d::Zero();

  StageGradient sg;
  for (int k = n - 1; k >= 0; --k) {
    const PlanState& s = tr.states[k];
    stage_cost_gradient(s.drone.pose(), s.intrinsics, problem.lens, problem.shot, problem.options, sg);
    adj_p += sg.position;
    collision_penalty(problem, s.drone.position, &adj_p);
    adj_R += sg.rotation;
    adj_c += sg.intrinsics;

    // Lens: next = clamp(raw), raw = prev + rate dt, penalty on raw - clamp(raw).
    const Eigen::Vector3d& raw = tr.raw_intrinsics[k];
    const Eigen::Vector3d clamped = raw.cwiseMax(lo).cwiseMin(hi);
    Eigen::Vector3d adj_raw = 2.0 * problem.intrinsics_weight * (raw - clamped);
    for (int i = 0; i < 3; ++i) {
      if (raw[i] >= lo[i] && raw[i] <= hi[i]) adj_raw[i] += adj_c[i];
    }
    auto slot = grad.segment<kInputsPerSlot>(kInputsPerSlot * k);
    slot.tail<3>() = dt * adj_raw;
    adj_c = adj_raw;

    // Drone: p' = p + v dt + a dt^2/2, v' = v + a dt, R' = R exp(w dt).
    slot.head<3>() = 0.5 * dt * dt * adj_p + dt * adj_v;
    const Eigen::Matrix3d& E = tr.increments[k];
    const Eigen::Matrix3d M = s.drone.rotation.transpose() * adj_R;
    const Eigen::Vector3d phi = plan.drone_inputs[k].gimbal_rate * dt;
    slot.segment<3>(3) = dt * right_jacobian(phi).transpose() * vee_antisymmetric(M);
    adj_v += dt * adj_p;
    adj_R = adj_R * E.transpose();
  }
  grad += 2.0 * flatten(plan).cwiseProduct(problem.effort.replicate(n, 1));
  return grad;
}

}  // namespace cinempc
