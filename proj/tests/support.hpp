#pragma once

// Shared test helpers: seeded generators for property tests, an independent
// high-precision thin-lens oracle and finite-difference utilities.

#include "cinempc/costs.hpp"
#include "cinempc/geometry.hpp"
#include "cinempc/mpc.hpp"
#include "cinempc/optics.hpp"
#include "cinempc/plan.hpp"
#include "cinempc/world.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace cinempc::testkit {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(CINEMPC_SOURCE_DIR) / rel;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Eigen::Vector3d vector(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Rotation rotation() {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng_), n(rng_), n(rng_), n(rng_));
    q.normalize();
    return q.toRotationMatrix();
  }

  /// A lens with a random sensor and matching pixel aspect.
  LensConstants lens() {
    LensConstants l;
    l.circle_of_confusion = log_uniform(5e-6, 1e-4);
    l.sensor_height = uniform(0.01, 0.03);
    l.image_height = integer(480, 2160);
    l.image_width = integer(l.image_height, 2 * l.image_height);
    l.sensor_width = l.sensor_height * l.image_width / l.image_height;
    l.principal_point = {l.image_width / 2.0, l.image_height / 2.0};
    return l;
  }

  /// Intrinsics with focal_length < focus_distance <= (1 - margin) H.
  CameraIntrinsics bounded_intrinsics(const LensConstants& lens, double margin = 1e-2) {
    CameraIntrinsics in;
    in.focal_length = uniform(0.01, 0.3);
    in.aperture = uniform(1.0, 32.0);
    const double h = hyperfocal(in, lens);
    const double t = log_uniform(1e-6, 1.0 - margin);
    in.focus_distance = in.focal_length + t * (h * (1.0 - margin) - in.focal_length);
    return in;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Largest componentwise |a - b| / max(|b|, floor).
template <typename A, typename B>
double max_rel_error(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double floor = 1e-300) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double ref = std::max(std::abs(b(i)), floor);
    worst = std::max(worst, std::abs(a(i) - b(i)) / ref);
  }
  return worst;
}

/// Central difference of a scalar function of a vector.
template <typename F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step[i];
    xm[i] -= step[i];
    g[i] = (f(xp) - f(xm)) / (2.0 * step[i]);
  }
  return g;
}

/// Central differences refined by Richardson extrapolation (Ridders'
/// scheme): starts at `step`, shrinks it by 1.4 per level and keeps the
/// estimate with the smallest extrapolation error.
template <typename F>
Eigen::VectorXd ridders_gradient(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& step) {
  constexpr int kLevels = 10;
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink;
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto central = [&](double h) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      return (f(xp) - f(xm)) / (2.0 * h);
    };
    double a[kLevels][kLevels];
    double h = step[i];
    double best_err = std::numeric_limits<double>::infinity();
    a[0][0] = central(h);
    g[i] = a[0][0];
    for (int r = 1; r < kLevels; ++r) {
      h /= kShrink;
      a[0][r] = central(h);
      double fac = kShrink2;
      for (int c = 1; c <= r; ++c) {
        a[c][r] = (a[c - 1][r] * fac - a[c - 1][r - 1]) / (fac - 1.0);
        fac *= kShrink2;
        const double err = std::max(std::abs(a[c][r] - a[c - 1][r]), std::abs(a[c][r] - a[c - 1][r - 1]));
        if (err <= best_err) {
          best_err = err;
          g[i] = a[c][r];
        }
      }
      if (std::abs(a[r][r] - a[r - 1][r - 1]) >= 2.0 * best_err) break;
    }
  }
  return g;
}

/// Central-difference gradient of evaluate_plan(...).objective(). The effort
/// penalty and the remaining terms are differenced separately and summed, so
/// inputs that only the effort term sees are not buried under the roundoff
/// of a much larger shot cost.
inline Eigen::VectorXd plan_fd_gradient(const PlanningProblem& problem, const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& step) {
  auto shot = [&](const Eigen::VectorXd& v) {
    const PlanEvaluation e = evaluate_plan(problem, unflatten(v));
    return e.objective() - e.effort_penalty;
  };
  auto effort = [&](const Eigen::VectorXd& v) { return evaluate_plan(problem, unflatten(v)).effort_penalty; };
  return ridders_gradient(shot, z, step) + ridders_gradient(effort, z, step);
}

/// A solver configuration that only lets the lens rates in `free` move.
/// Indices are 6 (focal), 7 (focus) and 8 (aperture) in the slot layout.
inline SolverConfig lens_only_config(std::initializer_list<int> free, double rate) {
  SolverConfig cfg;
  cfg.inputs.lower.setZero();
  cfg.inputs.upper.setZero();
  for (int i : free) {
    cfg.inputs.lower[i] = -rate;
    cfg.inputs.upper[i] = rate;
  }
  cfg.effort_weight = 0.0;
  return cfg;
}

/// Random shot against targets placed ahead of a camera near the origin.
/// Weights are drawn so every term family is exercised; `anchor` places the
/// desired DoF limits near the targets.
inline ShotObjective random_shot(Gen& gen, const std::vector<Eigen::Vector3d>& targets) {
  ShotObjective shot;
  if (gen.coin(0.7)) {
    shot.desired_near = gen.uniform(2.0, 10.0);
    shot.near_weight = gen.uniform(0.1, 2.0);
  }
  if (gen.coin(0.7)) {
    shot.desired_far = gen.coin(0.2) ? std::numeric_limits<double>::infinity() : gen.uniform(3.0, 60.0);
    shot.far_weight = gen.uniform(0.1, 2.0);
  }
  for (const auto& t : targets) {
    if (gen.coin(0.8)) {
      shot.image.push_back({t + Eigen::Vector3d(0, 0, gen.uniform(0, 0.9)),
                            {gen.uniform(0, 1920), gen.uniform(0, 1080)}, gen.log_uniform(1e-4, 1e-2)});
    }
    if (gen.coin(0.8)) shot.depth.push_back({t, gen.uniform(3.0, 8.0), gen.uniform(0.1, 2.0)});
    if (gen.coin(0.8)) {
      shot.orientation.push_back({yaw_rotation(gen.uniform(-3.1, 3.1)), relative_rotation_from_yaw(gen.uniform(-3.1, 3.1)),
                                  gen.uniform(0.1, 2.0)});
    }
  }
  return shot;
}

inline std::vector<Eigen::Vector3d> random_targets(Gen& gen) {
  std::vector<Eigen::Vector3d> t;
  const int n = gen.integer(1, 2);
  for (int i = 0; i < n; ++i) t.push_back({gen.uniform(5, 15), gen.uniform(-3, 3), gen.uniform(0, 2)});
  return t;
}

/// A camera at the origin heading roughly along world +x.
inline DroneState random_camera_state(Gen& gen) {
  DroneState d;
  d.position = gen.vector(-1, 1) + Eigen::Vector3d(0, 0, 1.5);
  d.velocity = gen.vector(-1, 1);
  d.rotation = camera_rotation(gen.uniform(-0.2, 0.2), gen.uniform(-0.1, 0.1)) * exp_map(gen.vector(-0.05, 0.05), 1.0);
  return d;
}

/// Lens state with focus short of the hyperfocal distance (bounded far limit).
inline CameraIntrinsics random_lens_state(Gen& gen) {
  CameraIntrinsics c{gen.uniform(0.03, 0.1), 0.0, gen.uniform(2.0, 16.0)};
  c.focus_distance = std::min(gen.uniform(2.0, 30.0), gen.uniform(0.3, 0.9) * hyperfocal(c, LensConstants{}));
  c.focus_distance = std::max(c.focus_distance, 0.6);
  return c;
}

struct GradientCase {
  PlanningProblem problem;
  ControlPlan plan;
  Eigen::VectorXd step;  // central-difference step per decision variable
};

/// A horizon problem and plan in the smooth interior: no lens state reaches
/// the box and every weighted point stays in front of the camera.
inline GradientCase random_gradient_case(Gen& gen) {
  for (;;) {
    const SolverConfig cfg;
    const std::vector<Eigen::Vector3d> targets = random_targets(gen);
    const DroneState drone = random_camera_state(gen);
    const CameraIntrinsics intr = random_lens_state(gen);
    Measurement m;
    for (std::size_t i = 0; i < targets.size(); ++i) m.push_back({"t" + std::to_string(i), targets[i], Rotation::Identity()});
    GradientCase c{make_problem(drone, intr, LensConstants{}, random_shot(gen, targets), m, 0.2, cfg), {}, {}};

    const int horizon = gen.integer(1, 10);
    const SlotVector bound = cfg.inputs.upper;
    SlotVector reach;
    reach << 1, 1, 1, 0.2, 0.2, 0.2, 0.5, 0.4, 0.5;
    Eigen::VectorXd z(kInputsPerSlot * (horizon + 1));
    c.step.resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const int j = static_cast<int>(i % kInputsPerSlot);
      z[i] = gen.uniform(-1, 1) * reach[j] * bound[j];
      c.step[i] = (j < 6 ? 0.2 : 2e-2) * bound[j];
    }
    c.plan = unflatten(z);

    const auto states = rollout(drone, intr, c.plan, 0.2, c.problem.box);
    bool ok = true;
    for (const auto& s : states) {
      const CameraIntrinsics& x = s.intrinsics;
      const CameraIntrinsics& lo = c.problem.box.lower;
      const CameraIntrinsics& hi = c.problem.box.upper;
      ok &= x.focal_length > lo.focal_length * 1.01 && x.focal_length < hi.focal_length * 0.99;
      ok &= x.focus_distance > lo.focus_distance * 1.01 && x.focus_distance < hi.focus_distance * 0.99;
      ok &= x.aperture > lo.aperture * 1.01 && x.aperture < hi.aperture * 0.99;
      ok &= x.focus_distance < 0.95 * hyperfocal(x, c.problem.lens);
      ok &= stage_cost(s.drone.pose(), x, c.problem.lens, c.problem.shot).behind_camera == 0;
    }
    if (ok) return c;
  }
}

}  // namespace cinempc::testkit
