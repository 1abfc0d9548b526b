#pragma once

// Declarative scenarios and the closed-loop runner.

#include "cinempc/costs.hpp"
#include "cinempc/mpc.hpp"
#include "cinempc/optics.hpp"
#include "cinempc/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cinempc {

inline constexpr int kScenarioVersion = 1;

struct InitialDrone {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double yaw = 0.0;    // rad, heading of the camera axis
  double pitch = 0.0;  // rad, positive looks up

  DroneState state() const { return {position, velocity, camera_rotation(yaw, pitch)}; }

  bool operator==(const InitialDrone&) const = default;
};

struct Sequence {
  double start = 0.0;  // s
  std::string name;
  ShotDirective directive;

  bool operator==(const Sequence&) const = default;
};

struct Scenario {
  std::string name;
  double duration = 0.0;  // s
  double dt = 0.2;        // s
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;  // m
  LensConstants lens;
  CameraIntrinsics intrinsics{0.035, 5.0, 2.8};
  InitialDrone drone;
  std::vector<TargetScript> targets;
  std::vector<Sequence> sequences;
  SolverConfig solver;
  CostOptions costs;

  /// Index of the last sequence whose start is <= t.
  int active_sequence(double t) const;

  bool operator==(const Scenario&) const = default;
};

/// Schema violation or malformed document. `path` is a JSON pointer and
/// `line` the 1-based line of the offending value (0 when unknown).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, int line, const std::string& message);

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::filesystem::path& path);

/// Normalized JSON document with every default filled in, in file units.
std::string dump_scenario(const Scenario& scenario);

/// Document describing every default value.
std::string dump_defaults();

struct TargetTrace {
  Eigen::Vector3d true_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d measured_position = Eigen::Vector3d::Zero();

  bool operator==(const TargetTrace&) const = default;
};

/// One closed-loop control tick.
struct TraceRecord {
  double time = 0.0;
  int sequence = 0;
  DroneState drone;
  CameraIntrinsics intrinsics;
  DofInterval dof;
  std::optional<double> desired_near;
  std::optional<double> desired_far;
  CostBreakdown cost;  // stage cost of the current state
  double penalty = 0.0;  // constraint penalties of the solved plan
  DroneInput drone_input;
  IntrinsicsInput camera_input;
  int iterations = 0;
  bool converged = false;
  std::uint32_t clamp_flags = kClampNone;  // set by the step that applies the inputs
  std::vector<TargetTrace> targets;
};

bool operator==(const TraceRecord& a, const TraceRecord& b);

struct Trace {
  std::vector<std::string> target_ids;
  std::vector<TraceRecord> records;

  bool operator==(const Trace&) const = default;
};

enum class RunStatus { kOk, kNumericFailure };

struct RunResult {
  Trace trace;
  RunStatus status = RunStatus::kOk;
  std::string message;
};

/// Called after each recorded tick.
using RunObserver = std::function<void(const TraceRecord&)>;

/// Steps the world at scenario.dt, switches directives at their start times
/// and records one TraceRecord per tick. Stops with a partial trace and
/// kNumericFailure if the state stops being finite.
RunResult run(const Scenario& scenario, const RunObserver& observer = {});

}  // namespace cinempc
