#include "cinempc/world.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace cinempc;
using cinempc::testkit::Gen;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

}  // namespace

TEST(StepDrone, CoastsUnderZeroInput) {
  DroneState s;
  s.velocity = {1, 0, 0};
  const DroneState n = step_drone(s, DroneInput{}, 1.0);
  EXPECT_EQ(n.position, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(n.velocity, s.velocity);
  EXPECT_EQ(n.rotation, s.rotation);
}

TEST(StepDrone, ConstantAcceleration) {
  DroneInput u;
  u.acceleration = {0, 0, 2};
  const DroneState n = step_drone(DroneState{}, u, 0.5);
  EXPECT_EQ(n.velocity, Eigen::Vector3d(0, 0, 1));
  EXPECT_EQ(n.position, Eigen::Vector3d(0, 0, 0.25));
}

TEST(StepDrone, GimbalRateAboutZ) {
  DroneInput u;
  u.gimbal_rate = {0, 0, kPi};
  const DroneState n = step_drone(DroneState{}, u, 0.5);
  EXPECT_LT((n.rotation - yaw_rotation(kPi / 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(StepDrone, ConservationProperties) {
  Gen gen(31);
  for (int i = 0; i < 500; ++i) {
    DroneState s{gen.vector(-10, 10), gen.vector(-3, 3), gen.rotation()};
    DroneInput no_accel;
    no_accel.gimbal_rate = gen.vector(-1, 1);
    EXPECT_EQ(step_drone(s, no_accel, 0.2).velocity, s.velocity);
    DroneInput no_rate;
    no_rate.acceleration = gen.vector(-3, 3);
    EXPECT_EQ(step_drone(s, no_rate, 0.2).rotation, s.rotation);
  }
}

TEST(StepCamera, ZeroInputIsIdentity) {
  const CameraIntrinsics c{0.035, 5.0, 2.8};
  const CameraStep s = step_camera(c, IntrinsicsInput{}, 0.2, IntrinsicsBox{});
  EXPECT_EQ(s.intrinsics, c);
  EXPECT_EQ(s.clamped, kClampNone);
}

TEST(StepCamera, FocalRateAddsOneMillimetre) {
  const CameraStep s = step_camera(CameraIntrinsics{0.035, 5.0, 2.8}, IntrinsicsInput{0.005, 0, 0}, 0.2, IntrinsicsBox{});
  EXPECT_NEAR(s.intrinsics.focal_length, 0.036, 1e-15);
  EXPECT_EQ(s.clamped, kClampNone);
}

TEST(StepCamera, ClampsAndFlags) {
  const IntrinsicsBox box;
  const CameraStep s = step_camera(CameraIntrinsics{0.035, 5.0, 1.5}, IntrinsicsInput{0, 0, -4}, 0.2, box);
  EXPECT_EQ(s.intrinsics.aperture, box.lower.aperture);
  EXPECT_EQ(s.clamped, kClampAperture);
  const CameraStep t = step_camera(CameraIntrinsics{0.199, 99.5, 2.8}, IntrinsicsInput{0.01, 5, 0}, 0.2, box);
  EXPECT_EQ(t.clamped, kClampFocalLength | kClampFocusDistance);
  EXPECT_TRUE(box.contains(t.intrinsics));
}

TEST(StepCamera, RepeatedStepsMatchOneLongStep) {
  Gen gen(32);
  const IntrinsicsBox wide{{1e-3, 0.01, 0.1}, {10.0, 1e4, 1e3}};
  for (int i = 0; i < 200; ++i) {
    const CameraIntrinsics c0{gen.uniform(0.03, 0.1), gen.uniform(2, 50), gen.uniform(2, 10)};
    const IntrinsicsInput u{gen.uniform(-0.01, 0.01), gen.uniform(-5, 5), gen.uniform(-4, 4)};
    const int n = gen.integer(1, 20);
    CameraIntrinsics c = c0;
    for (int k = 0; k < n; ++k) c = step_camera(c, u, 0.1, wide).intrinsics;
    const CameraIntrinsics once = step_camera(c0, u, 0.1 * n, wide).intrinsics;
    EXPECT_NEAR(c.focal_length, once.focal_length, 1e-12);
    EXPECT_NEAR(c.focus_distance, once.focus_distance, 1e-12);
    EXPECT_NEAR(c.aperture, once.aperture, 1e-12);
  }
}

namespace {

TargetScript two_waypoints() {
  return {"walker", {{0.0, {0, 0, 0}, 0.0}, {10.0, {10, 0, 0}, 0.0}}, {}};
}

}  // namespace

TEST(Targets, HoldsEndpoints) {
  const TargetScript s = two_waypoints();
  EXPECT_EQ(scripted_pose(s, -5.0).position, Eigen::Vector3d(0, 0, 0));
  EXPECT_EQ(scripted_pose(s, 50.0).position, Eigen::Vector3d(10, 0, 0));
}

TEST(Targets, LinearMidpoint) {
  const std::vector<TargetState> st = step_targets({two_waypoints()}, 5.0);
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0].id, "walker");
  EXPECT_LT((st[0].pose.position - Eigen::Vector3d(5, 0, 0)).norm(), 1e-15);
}

TEST(Targets, YawTakesShortestArc) {
  const TargetScript s{"t", {{0.0, {0, 0, 0}, 350 * kDeg}, {1.0, {0, 0, 0}, 10 * kDeg}}, {}};
  const Pose p = scripted_pose(s, 0.5);
  EXPECT_LT((p.rotation - Rotation::Identity()).norm(), 1e-12);
  EXPECT_NEAR(heading(scripted_pose(s, 0.25).rotation, Eigen::Vector3d::UnitX()), -5 * kDeg, 1e-12);
}

TEST(Targets, EmptyScriptRejected) {
  EXPECT_THROW(scripted_pose(TargetScript{"x", {}, {}}, 0.0), std::invalid_argument);
}

TEST(Measurement, ZeroNoiseIsExact) {
  std::mt19937_64 rng(1);
  const std::vector<TargetState> truth = step_targets({two_waypoints()}, 3.0);
  const Measurement m = measure_targets(truth, 0.0, rng);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].position, truth[0].pose.position);
  EXPECT_EQ(m[0].rotation, truth[0].pose.rotation);
  EXPECT_THROW(measure_targets(truth, -1.0, rng), std::invalid_argument);
}

TEST(Measurement, SeededChannelIsRepeatable) {
  const std::vector<TargetState> truth = step_targets({two_waypoints()}, 3.0);
  MeasurementChannel a(0.05, 99), b(0.05, 99), c(0.05, 100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const Measurement ma = a(truth), mb = b(truth), mc = c(truth);
    EXPECT_EQ(ma[0].position, mb[0].position);
    EXPECT_EQ(ma[0].rotation, truth[0].pose.rotation);
    differs |= ma[0].position != mc[0].position;
  }
  EXPECT_TRUE(differs);
}

TEST(Measurement, EmpiricalSpread) {
  const std::vector<TargetState> truth = step_targets({two_waypoints()}, 3.0);
  MeasurementChannel ch(0.05, 7);
  constexpr int n = 10000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d e = ch(truth)[0].position - truth[0].pose.position;
    sum += e;
    sq += e.cwiseProduct(e);
  }
  const Eigen::Vector3d mean = sum / n;
  const Eigen::Vector3d sd = (sq / n - mean.cwiseProduct(mean)).cwiseSqrt();
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(sd[i], 0.05, 0.05 * 0.05);
    EXPECT_NEAR(mean[i], 0.0, 5 * 0.05 / std::sqrt(double(n)));
  }
}
