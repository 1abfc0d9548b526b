#include "cinempc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace cinempc {

namespace {

constexpr int kMetricRefresh = 10;

}  // namespace

InputBox InputBox::symmetric(double acceleration, double gimbal_rate, double focal_rate, double focus_rate,
                             double aperture_rate) {
  SlotVector hi;
  hi << acceleration, acceleration, acceleration, gimbal_rate, gimbal_rate, gimbal_rate, focal_rate, focus_rate,
      aperture_rate;
  return {-hi, hi};
}

bool InputBox::contains(const ControlPlan& plan) const {
  const Eigen::VectorXd z = flatten(plan);
  for (int k = 0; k < plan.size(); ++k) {
    const auto slot = z.segment<kInputsPerSlot>(kInputsPerSlot * k);
    if ((slot.array() < lower.array()).any() || (slot.array() > upper.array()).any()) return false;
  }
  return true;
}

ControlPlan InputBox::project(const ControlPlan& plan) const {
  Eigen::VectorXd z = flatten(plan);
  for (int k = 0; k < plan.size(); ++k) {
    auto slot = z.segment<kInputsPerSlot>(kInputsPerSlot * k);
    slot = slot.cwiseMax(lower).cwiseMin(upper);
  }
  return unflatten(z);
}

void SolverConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("solver.horizon must be at least 1");
  if (max_iterations < 0) throw std::invalid_argument("solver.max_iterations must be non-negative");
  if (!(gradient_tolerance > 0)) throw std::invalid_argument("solver.gradient_tolerance must be positive");
  if (memory < 1) throw std::invalid_argument("solver.memory must be at least 1");
  if (!(armijo > 0 && armijo < 1)) throw std::invalid_argument("solver.armijo must lie in (0, 1)");
  if (!(backtrack > 0 && backtrack < 1)) throw std::invalid_argument("solver.backtrack must lie in (0, 1)");
  if (max_backtracks < 1) throw std::invalid_argument("solver.max_backtracks must be at least 1");
  if ((inputs.lower.array() > inputs.upper.array()).any()) throw std::invalid_argument("solver input box is empty");
  const auto& lo = intrinsics.lower;
  const auto& hi = intrinsics.upper;
  if (!(lo.focal_length > 0 && lo.aperture > 0) || lo.focal_length > hi.focal_length ||
      lo.focus_distance > hi.focus_distance || lo.aperture > hi.aperture) {
    throw std::invalid_argument("intrinsics box is empty or non-positive");
  }
  // Focus must stay clear of the focal length everywhere in the box.
  if (!(lo.focus_distance >= hi.focal_length * (1.0 + 1e-6))) {
    throw std::invalid_argument("intrinsics box allows focus distance at or below the focal length");
  }
  if ((workspace_lower.array() > workspace_upper.array()).any()) throw std::invalid_argument("workspace box is empty");
  if (min_target_distance < 0 || collision_weight < 0 || intrinsics_weight < 0 || effort_weight < 0) {
    throw std::invalid_argument("penalty parameters must be non-negative");
  }
}

PlanningProblem make_problem(const DroneState& drone, const CameraIntrinsics& intrinsics, const LensConstants& lens,
                             const ShotObjective& shot, const Measurement& measurement, double dt,
                             const SolverConfig& cfg) {
  PlanningProblem p;
  p.drone = drone;
  p.intrinsics = intrinsics;
  p.lens = lens;
  p.shot = shot;
  p.box = cfg.intrinsics;
  p.dt = dt;
  for (const auto& m : measurement) p.obstacles.push_back(m.position);
  p.min_distance = cfg.min_target_distance;
  p.collision_weight = cfg.collision_weight;
  p.intrinsics_weight = cfg.intrinsics_weight;
  for (int i = 0; i < kInputsPerSlot; ++i) {
    const double bound = std::max(std::abs(cfg.inputs.lower[i]), std::abs(cfg.inputs.upper[i]));
    p.effort[i] = bound > 0 ? cfg.effort_weight / (bound * bound) : 0.0;
  }
  p.workspace_lower = cfg.workspace_lower;
  p.workspace_upper = cfg.workspace_upper;
  return p;
}

SolveResult solve(PlanningProblem problem, const ControlPlan& warm, const SolverConfig& cfg) {
  if (!(problem.dt > 0)) throw std::invalid_argument("solve: dt must be positive");
  SolveResult out;
  if (!problem.box.contains(problem.intrinsics)) {
    problem.intrinsics = problem.box.clamp(problem.intrinsics);
    out.constraints.initial_state_projected = true;
  }
  const ControlPlan start = cfg.inputs.project(warm);
  out.constraints.warm_start_projected = !(start == warm);

  const int slots = start.size();
  const Eigen::Index n = static_cast<Eigen::Index>(kInputsPerSlot) * slots;
  Eigen::VectorXd lower(n), upper(n), scale(n);
  for (int k = 0; k < slots; ++k) {
    lower.segment<kInputsPerSlot>(kInputsPerSlot * k) = cfg.inputs.lower;
    upper.segment<kInputsPerSlot>(kInputsPerSlot * k) = cfg.inputs.upper;
  }
  // Optimize in box-normalized coordinates so every input has unit range.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double half = 0.5 * (upper[i] - lower[i]);
    scale[i] = half > 0 ? half : 1.0;
  }

  auto to_plan = [&](const Eigen::VectorXd& xi) {
    return unflatten(xi.cwiseProduct(scale).cwiseMax(lower).cwiseMin(upper));
  };
  auto fg = [&](const Eigen::VectorXd& xi, Eigen::VectorXd& g) {
    PlanEvaluation ev;
    g = cost_gradient(problem, to_plan(xi), &ev).cwiseProduct(scale);
    return ev.objective();
  };

  BoxMinimizerOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.gradient_tolerance = cfg.gradient_tolerance;
  opt.memory = cfg.memory;
  opt.armijo = cfg.armijo;
  opt.backtrack = cfg.backtrack;
  opt.max_backtracks = cfg.max_backtracks;

  const Eigen::VectorXd xi0 = flatten(start).cwiseQuotient(scale);
  const Eigen::VectorXd lo = lower.cwiseQuotient(scale);
  const Eigen::VectorXd hi = upper.cwiseQuotient(scale);

  // The quasi-Newton metric is re-seeded every few iterations from a
  // finite-difference Hessian of the analytic gradient, so badly scaled
  // horizons still converge within the iteration budget.
  auto metric_at = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd hess(n, n);
    Eigen::VectorXd g0(n), gi(n);
    fg(x, g0);
    constexpr double h = 1e-6;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd xi = x;
      const double step = x[i] + h <= hi[i] ? h : -h;
      xi[i] += step;
      fg(xi, gi);
      hess.col(i) = (gi - g0) / step;
    }
    return positive_definite_metric(hess);
  };

  BoxMinimizerResult r;
  r.x = xi0;
  int iterations = 0;
  int evaluations = 0;
  do {
    opt.max_iterations = std::min(kMetricRefresh, cfg.max_iterations - iterations);
    const Eigen::MatrixXd metric = metric_at(r.x);
    evaluations += static_cast<int>(n) + 1;
    r = minimize_box(fg, r.x, lo, hi, opt, &metric);
    iterations += r.iterations;
    evaluations += r.evaluations;
  } while (!r.converged && r.iterations > 0 && iterations < cfg.max_iterations);
  r.iterations = iterations;
  r.evaluations = evaluations;

  ControlPlan plan = to_plan(r.x);
  PlanEvaluation ev = evaluate_plan(problem, plan);
  const PlanEvaluation warm_ev = evaluate_plan(problem, start);
  if (!(ev.objective() <= warm_ev.objective())) {
    plan = start;
    ev = warm_ev;
  }

  out.plan = std::move(plan);
  out.cost = ev.cost;
  out.objective = ev.objective();
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.projected_gradient = r.projected_gradient;
  out.constraints.intrinsics_penalty = ev.intrinsics_penalty;
  out.constraints.collision_penalty = ev.collision_penalty;
  out.constraints.effort_penalty = ev.effort_penalty;
  out.constraints.behind_camera = ev.cost.behind_camera;
  return out;
}

ControlPlan shift_warm_start(const ControlPlan& prev) {
  ControlPlan next = prev;
  const int n = prev.size();
  if (n == 0) return next;
  for (int k = 0; k + 1 < n; ++k) {
    next.drone_inputs[k] = prev.drone_inputs[k + 1];
    next.camera_inputs[k] = prev.camera_inputs[k + 1];
  }
  return next;
}

Controller::Controller(LensConstants lens, SolverConfig cfg, double dt, std::vector<TargetScript> targets)
    : lens_(std::move(lens)), cfg_(std::move(cfg)), dt_(dt), targets_(std::move(targets)),
      warm_(ControlPlan::zero(cfg_.horizon)) {
  cfg_.validate();
  validate(lens_);
  if (!(dt_ > 0)) throw std::invalid_argument("controller dt must be positive");
}

ControlOutput Controller::control_step(const DroneState& drone, const CameraIntrinsics& intrinsics,
                                       const Measurement& measurement, const ShotDirective& directive) {
  ControlOutput out;
  out.shot = resolve(directive, measurement, targets_, drone.pose());
  const PlanningProblem problem = make_problem(drone, intrinsics, lens_, out.shot, measurement, dt_, cfg_);
  out.result = solve(problem, warm_, cfg_);
  out.drone_input = out.result.plan.drone_inputs.front();
  out.camera_input = out.result.plan.camera_inputs.front();
  warm_ = shift_warm_start(out.result.plan);
  return out;
}

}  // namespace cinempc
