// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// quantity next to its threshold. Exit status is non-zero if any line fails.

#include "cinempc/costs.hpp"
#include "cinempc/mpc.hpp"
#include "cinempc/optics.hpp"
#include "cinempc/scenario.hpp"
#include "cinempc/trace.hpp"

#include "optics_oracle.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace cinempc;
using cinempc::testkit::Gen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  failures += !pass;
  std::printf("%s %d %s: %s; runtime %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              limit_s, in_time ? "" : " exceeded");
  std::fflush(stdout);
}

Outcome optics_oracle() {
  Gen gen(1001);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const LensConstants lens = gen.lens();
    const CameraIntrinsics in = gen.bounded_intrinsics(lens);
    const auto o = testkit::oracle_dof(in.focal_length, in.focus_distance, in.aperture, lens.circle_of_confusion);
    worst = std::max({worst, testkit::oracle_rel_error(hyperfocal(in, lens), o.hyperfocal),
                      testkit::oracle_rel_error(near_distance(in, lens), o.near),
                      testkit::oracle_rel_error(far_distance(in, lens), o.far)});
  }
  return {worst <= 1e-12, fmt("worst relative error %.3g over 10000 inputs (limit 1e-12)", worst)};
}

Outcome hyperfocal_identity() {
  Gen gen(1002);
  double worst = 0.0;
  int unbounded = 0;
  for (int i = 0; i < 1000; ++i) {
    const LensConstants lens = gen.lens();
    CameraIntrinsics in{gen.uniform(0.01, 0.3), 0.0, gen.uniform(1.0, 32.0)};
    const double h = hyperfocal(in, lens);
    in.focus_distance = h;
    worst = std::max(worst, std::abs(near_distance(in, lens) - h / 2) / (h / 2));
    unbounded += std::isinf(far_distance(in, lens)) && far_distance(in, lens) > 0;
  }
  return {worst <= 1e-9 && unbounded == 1000,
          fmt("worst |D_n - H/2| / (H/2) = %.3g (limit 1e-9), unbounded far %d/1000", worst, unbounded)};
}

Outcome gradient_checks() {
  Gen gen(1003);
  double worst_dof = 0.0;
  for (int i = 0; i < 200; ++i) {
    const LensConstants lens = gen.lens();
    const CameraIntrinsics in = gen.bounded_intrinsics(lens, 0.05);
    const auto o = testkit::oracle_partials(in.focal_length, in.focus_distance, in.aperture, lens.circle_of_confusion);
    const DofPartials p = dof_partials(in, lens);
    worst_dof = std::max({worst_dof, testkit::max_rel_error(p.near, Eigen::Vector3d(o.near), 1e-8),
                          testkit::max_rel_error(p.far, Eigen::Vector3d(o.far), 1e-8)});
  }
  double worst_cost = 0.0;
  for (int i = 0; i < 200; ++i) {
    const testkit::GradientCase c = testkit::random_gradient_case(gen);
    const Eigen::VectorXd z = flatten(c.plan);
    const Eigen::VectorXd fd = testkit::plan_fd_gradient(c.problem, z, c.step);
    worst_cost = std::max(worst_cost, testkit::max_rel_error(cost_gradient(c.problem, c.plan), fd, 1e-8));
  }
  return {worst_dof <= 1e-5 && worst_cost <= 1e-5,
          fmt("worst relative error dof_partials %.3g, cost_gradient %.3g over 200 configurations each (limit 1e-5)",
              worst_dof, worst_cost)};
}

Outcome aperture_grid_oracle() {
  const SolverConfig cfg = testkit::lens_only_config({8}, 200.0);
  const CameraIntrinsics start{0.035, 5.0, 2.8};
  ShotObjective shot;
  shot.desired_near = 4.2;
  shot.near_weight = 1.0;
  shot.desired_far = 8.0;
  shot.far_weight = 1.0;
  DroneState d;
  d.position = {0, 0, 1.5};
  d.rotation = camera_rotation(0.0);
  const LensConstants lens;
  const PlanningProblem problem = make_problem(d, start, lens, shot, {}, 0.2, cfg);
  const SolveResult r = solve(problem, ControlPlan::zero(cfg.horizon), cfg);
  const CameraIntrinsics terminal = rollout(d, start, r.plan, problem.dt, problem.box).back().intrinsics;

  constexpr int kPoints = 100000;
  const double lo = cfg.intrinsics.lower.aperture, hi = cfg.intrinsics.upper.aperture;
  const double cell = (hi - lo) / (kPoints - 1);
  double best = std::numeric_limits<double>::infinity(), best_a = lo;
  for (int i = 0; i < kPoints; ++i) {
    const double a = lo + cell * i;
    const double v = j_dof({start.focal_length, start.focus_distance, a}, lens, shot);
    if (v < best) best = v, best_a = a;
  }
  const double cost = j_dof(terminal, lens, shot);
  const double rel = std::abs(cost - best) / best;
  const double da = std::abs(terminal.aperture - best_a);
  return {da <= cell && rel <= 1e-3,
          fmt("terminal A %.6f vs grid %.6f (|dA| %.3g, cell %.3g); cost %.6g vs %.6g (rel %.3g, limit 1e-3)",
              terminal.aperture, best_a, da, cell, cost, best, rel)};
}

// Errors of the last records against the single directive of static_target.json.
Outcome static_tracking() {
  Scenario s = load_scenario(testkit::source_path("scenarios/static_target.json"));
  s.noise_sigma = 0.0;
  const RunResult r = run(s);
  if (r.status != RunStatus::kOk) return {false, "run failed: " + r.message};
  const ShotDirective& dir = s.sequences.at(0).directive;
  const TargetScript& script = s.targets.at(0);
  const Pose target = scripted_pose(script, 0.0);
  const Eigen::Vector3d image_point =
      target.position + Eigen::Vector3d(0, 0, dir.image.at(0).feature.empty() ? 0.0 : script.features.at(0).height_offset);

  double depth_err = 0, u_err = 0, v_err = 0, far_err = 0, rot_err = 0;
  int checked = 0;
  for (const auto& rec : r.trace.records) {
    if (rec.time < 10.0 - 1e-9) continue;
    ++checked;
    const Pose cam = rec.drone.pose();
    const double depth = relative_position(cam, target.position).z();
    depth_err = std::max(depth_err, std::abs(depth - dir.depth.at(0).depth));
    const ImagePoint px = project(relative_position(cam, image_point), rec.intrinsics.focal_length, s.lens);
    u_err = std::max(u_err, std::abs(px.u - dir.image.at(0).point.x()));
    v_err = std::max(v_err, std::abs(px.v - dir.image.at(0).point.y()));
    far_err = std::max(far_err, std::abs(rec.dof.far - depth) / depth);
    rot_err = std::max(rot_err, rotation_distance(relative_rotation(cam, target), dir.orientation.at(0).relative));
  }
  const bool pass = checked > 0 && depth_err < 0.1 && u_err < 5 && v_err < 5 && far_err < 0.05 && rot_err < 0.05;
  return {pass, fmt("over t >= 10 s (%d records): |d - d*| %.3g m (< 0.1), image error (%.3g, %.3g) px (< 5), "
                    "|D_f - D_f*|/D_f* %.3g (< 0.05), chordal rotation error %.3g (< 0.05)",
                    checked, depth_err, u_err, v_err, far_err, rot_err)};
}

struct ParkRuns {
  Scenario scenario;
  RunResult first;
  std::string first_csv;
};

ParkRuns& park() {
  static ParkRuns p = [] {
    ParkRuns out;
    out.scenario = load_scenario(testkit::source_path("scenarios/park.json"));
    out.first = run(out.scenario);
    out.first_csv = format_trace(out.first.trace);
    return out;
  }();
  return p;
}

double mean_aperture(const Trace& t, double from, double to) {
  double sum = 0;
  int n = 0;
  for (const auto& r : t.records) {
    if (r.time >= from - 1e-9 && r.time < to - 1e-9) sum += r.intrinsics.aperture, ++n;
  }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

Outcome park_sequences() {
  const ParkRuns& p = park();
  if (p.first.status != RunStatus::kOk) return {false, "run failed: " + p.first.message};
  const Scenario& s = p.scenario;
  const auto& recs = p.first.trace.records;
  std::ostringstream detail;
  bool pass = true;
  for (std::size_t q = 1; q < s.sequences.size(); ++q) {
    const double start = s.sequences[q].start;
    const double end = q + 1 < s.sequences.size() ? s.sequences[q + 1].start : s.duration + s.dt;
    double before = 0.0, peak = 0.0, peak_time = start, settled = std::numeric_limits<double>::infinity();
    for (const auto& r : recs) {
      if (r.time < start - 1e-9) before = r.cost.total;
      if (r.time >= start - 1e-9 && r.time < end - 1e-9 && r.cost.total > peak) peak = r.cost.total, peak_time = r.time;
    }
    for (const auto& r : recs) {
      if (r.time > peak_time && r.time < end - 1e-9) settled = std::min(settled, r.cost.total);
    }
    const bool ok = peak > before && settled < 0.1 * peak;
    pass &= ok;
    detail << fmt("switch t=%.0f: before %.3g, peak %.3g at t=%.1f, min after peak %.3g (%.1f%%)%s; ", start, before,
                  peak, peak_time, settled, 100 * settled / peak, ok ? "" : " FAILS");
  }
  // Converged aperture: mean over the final 2 s of each sequence.
  const double a1 = mean_aperture(p.first.trace, s.sequences[1].start - 2, s.sequences[1].start);
  const double a2 = mean_aperture(p.first.trace, s.sequences[2].start - 2, s.sequences[2].start);
  pass &= a2 > a1;
  detail << fmt("converged aperture seq 1 %.4f, seq 2 %.4f", a1, a2);
  return {pass, detail.str()};
}

Outcome dof_width_monotone() {
  Gen gen(1007);
  int checked = 0, violations = 0;
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10; ++i) {
    const LensConstants lens = gen.lens();
    for (int j = 0; j < 10; ++j) {
      const double f = gen.uniform(0.01, 0.3);
      for (int k = 0; k < 10; ++k) {
        const double a = gen.uniform(1.0, 32.0);
        CameraIntrinsics in{f, 0.0, a};
        const double h = hyperfocal(in, lens);
        in.focus_distance = f + gen.uniform(1e-3, 0.99) * (h - f);
        const DofPartials p = dof_partials(in, lens);
        const double slope = p.far[2] - p.near[2];
        ++checked;
        violations += !(slope > 0);
        smallest = std::min(smallest, slope / (far_distance(in, lens) - near_distance(in, lens)) * a);
      }
    }
  }
  return {violations == 0 && checked == 1000,
          fmt("%d/%d points with d(D_f - D_n)/dA <= 0; smallest elasticity %.3g", violations, checked, smallest)};
}

Outcome determinism() {
  const ParkRuns& p = park();
  const RunResult second = run(p.scenario);
  const auto dir = std::filesystem::temp_directory_path() / "cinempc_acceptance";
  std::filesystem::create_directories(dir);
  write_trace(p.first.trace, dir / "a.csv");
  write_trace(second.trace, dir / "b.csv");
  auto bytes = [](const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = bytes(dir / "a.csv"), b = bytes(dir / "b.csv");
  return {!a.empty() && a == b && a == p.first_csv,
          fmt("%zu and %zu bytes, %s", a.size(), b.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  criterion(1, "optics oracle equivalence", 5, optics_oracle);
  criterion(2, "hyperfocal identity", 1, hyperfocal_identity);
  criterion(3, "gradient checks", 30, gradient_checks);
  criterion(4, "solver vs grid oracle", 30, aperture_grid_oracle);
  criterion(5, "closed-loop tracking", 120, static_tracking);
  criterion(6, "park scenario sequences", 300, park_sequences);
  criterion(7, "DoF width monotone in aperture", 1, dof_width_monotone);
  criterion(8, "determinism", 600, determinism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
