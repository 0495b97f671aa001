#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "pidr/frames.hpp"
#include "pidr/mechanization.hpp"

namespace pidr {

enum class ProfileKind { circle, rectangle, lawnmower, straight_dive };

/// Closed-form motion profile. All profiles start at the local-NED origin
/// heading north; speed == 0 degenerates to a static hold for any kind.
struct MotionProfile {
  ProfileKind kind = ProfileKind::circle;

  double radius = 5.0;       // circle [m]
  double leg_north = 20.0;   // rectangle north leg [m]
  double leg_east = 10.0;    // rectangle east leg [m]
  double leg_length = 15.0;  // lawnmower leg [m]
  double spacing = 3.0;      // lawnmower lane spacing [m]
  double dive_rate = 0.2;    // straight_dive vertical speed [m/s]
  double corner_time = 1.5;  // quintic blend window [s]

  double speed = 1.0;     // nominal leg speed [m/s]
  double duration = 60.0; // [s]
  double imu_rate = 100.0;
  double gt_rate = 5.0;
  GeodeticPosition origin = {0.558505360638185, 0.6108652381980153, 0.0};

  void validate() const;  // throws std::invalid_argument
};

/// Chart-kinematic ground truth at one instant: p, v, a are exact
/// derivatives of one another in local-NED meters; yaw tracks the velocity
/// heading, roll and pitch are zero.
struct AnalyticState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  EulerAngles eta;
  Eigen::Vector3d eta_dot = Eigen::Vector3d::Zero();
};

/// Ground truth expressed in mechanization variables: geodetic position,
/// geodetic NED velocity and its exact rate. This is the tuple the strapdown
/// equations evolve, derived from the chart kinematics through the exact
/// chart pullback (including the latitude dependence of the radii).
struct ExactNavState {
  GeodeticPosition position;
  Eigen::Vector3d p_ned = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_n = Eigen::Vector3d::Zero();
  Eigen::Vector3d vdot_n = Eigen::Vector3d::Zero();
  EulerAngles eta;
  Eigen::Vector3d eta_dot = Eigen::Vector3d::Zero();
};

/// Compiled profile: piecewise closed-form segments with continuous
/// acceleration (quintic velocity blends between legs).
class PathModel {
 public:
  explicit PathModel(const MotionProfile& profile);

  const MotionProfile& profile() const { return profile_; }

  /// Throws std::domain_error outside [0, duration].
  AnalyticState analytic_state(double t) const;

  ExactNavState exact_state(double t, const EarthModel& model) const;

  /// Continuous inverse mechanization: the ideal IMU measurement at time t,
  /// exactly consistent with exact_state under the strapdown equations.
  ImuSample imu_at(double t, const EarthModel& model) const;

  NavState initial_nav_state(const EarthModel& model) const;

  /// Ground-truth trajectory in local NED sampled at the GT rate.
  Trajectory ground_truth(const EarthModel& model) const;

 private:
  struct Segment {
    double t0, t1;
    Eigen::Vector3d p0, v0, v1;
  };

  AnalyticState segment_state(double t) const;
  AnalyticState circle_state(double t) const;

  MotionProfile profile_;
  std::vector<Segment> segments_;
};

/// Additive bias + white Gaussian noise sensor error model. Noise sigma per
/// sample is density * sqrt(rate); rate is inferred from the median sample
/// spacing. Deterministic under a fixed seed.
struct SensorErrorModel {
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();   // [m/s^2]
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();    // [rad/s]
  double accel_noise_density = 0.0;  // [m/s^2/sqrt(Hz)]
  double gyro_noise_density = 0.0;   // [rad/s/sqrt(Hz)]
  std::uint64_t seed = 0;

  /// Xsens DOT table values: 0.03 mg / 10 deg/h bias, 120 ug/sqrt(Hz) /
  /// 0.007 deg/s/sqrt(Hz) noise density. The accelerometer density is
  /// read as micro-g; the printed mg figure is configurable here.
  static SensorErrorModel xsens_dot(std::uint64_t seed);

  void validate() const;
};

/// Ideal IMU stream sampled at profile.imu_rate (duration * rate + 1
/// samples including t = 0).
std::vector<ImuSample> inverse_mechanization(const PathModel& path,
                                             const EarthModel& model);

std::vector<ImuSample> corrupt(std::span<const ImuSample> imu,
                               const SensorErrorModel& errors);

struct EmittedDataset {
  std::filesystem::path imu_csv;
  std::filesystem::path gt_csv;
  std::filesystem::path meta;
};

/// Writes imu.csv / gt.csv / meta.txt under out_dir using the dataset
/// module schemas.
EmittedDataset emit_dataset(const PathModel& path,
                            const SensorErrorModel& errors,
                            const std::filesystem::path& out_dir,
                            const EarthModel& model);

}  // namespace pidr
