#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pidr/frames.hpp"

namespace pidr {

/// One strapdown navigation state: geodetic position, NED velocity and the
/// body-to-NED attitude matrix.
struct NavState {
  GeodeticPosition position;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Matrix3d attitude = Eigen::Matrix3d::Identity();
};

/// Timestamped specific force [m/s^2] and angular rate [rad/s], both in the
/// body frame.
struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();
};

enum class TrajectoryFrame { geodetic, local_ned };

/// Time-indexed navigation solution. In the geodetic frame `position` holds
/// (lat [rad], lon [rad], height [m]); in local_ned it holds NED meters
/// relative to `origin`. Attitude is carried as Euler angles for output.
struct Trajectory {
  struct Row {
    double t = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d euler = Eigen::Vector3d::Zero();
  };

  TrajectoryFrame frame = TrajectoryFrame::geodetic;
  GeodeticPosition origin;
  std::vector<Row> rows;

  /// Sum of consecutive horizontal (N, E) position increments. Defined for
  /// local-NED trajectories.
  double path_length() const;
};

struct NavDerivative {
  Eigen::Vector3d position_rate;  // (dlat, dlon, dh)
  Eigen::Vector3d velocity_rate;
  Eigen::Matrix3d attitude_rate;
};

/// Continuous-time strapdown derivative: position through the D matrix,
/// velocity through specific force / Coriolis / gravity, attitude through
/// the relative angular rate.
NavDerivative nav_derivative(const NavState& state, const ImuSample& imu,
                             const EarthModel& model);

enum class IntegrationScheme { euler, rk4 };

/// Advances the state by one step holding the IMU sample constant across
/// RK4 substeps (zero-order hold). Attitude is re-orthogonalized after the
/// step. Requires 0 < dt <= 0.1 s.
NavState integrate_step(const NavState& state, const ImuSample& imu,
                        double dt, IntegrationScheme scheme,
                        const EarthModel& model);

/// How the IMU signal is reconstructed at RK4 substep times. The
/// single-sample hold caps global accuracy at first order in dt, so the
/// batch dead-reckoning path defaults to cubic reconstruction over the
/// neighboring samples (Lagrange on the actual timestamps).
enum class ImuHold { zoh, foh, cubic };

struct DeadReckonOptions {
  IntegrationScheme scheme = IntegrationScheme::rk4;
  ImuHold hold = ImuHold::cubic;
  bool mode_2d = false;  // planar platform: v_D forced to zero every step
};

/// Pure-inertial dead reckoning: one NavState per IMU timestamp, first
/// state equal to `init`. Throws std::invalid_argument on fewer than two
/// samples or non-monotone timestamps.
Trajectory dead_reckon(const NavState& init, std::span<const ImuSample> imu,
                       const DeadReckonOptions& opts, const EarthModel& model);

/// Maps a geodetic trajectory into local NED meters about `origin` via the
/// tangent-plane chart (radii evaluated at the origin, so the map is linear
/// and exactly invertible).
Trajectory geodetic_to_local_ned(const Trajectory& traj,
                                 const GeodeticPosition& origin,
                                 const EarthModel& model);

/// Exact inverse of geodetic_to_local_ned.
Trajectory local_ned_to_geodetic(const Trajectory& traj,
                                 const EarthModel& model);

/// Chart helpers shared with synth / loss.
Eigen::Vector3d geodetic_to_ned_point(const GeodeticPosition& p,
                                      const GeodeticPosition& origin,
                                      const EarthModel& model);
GeodeticPosition ned_to_geodetic_point(const Eigen::Vector3d& ned,
                                       const GeodeticPosition& origin,
                                       const EarthModel& model);

}  // namespace pidr
