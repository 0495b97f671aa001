#pragma once

#include <Eigen/Dense>

#include "pidr/detail/kin.hpp"

namespace pidr {

/// Wraps an angle to (-pi, pi].
double wrap_pi(double angle);

/// Geodetic position on the reference ellipsoid. Angles in radians, height
/// in meters above the ellipsoid.
struct GeodeticPosition {
  double lat = 0.0;
  double lon = 0.0;
  double height = 0.0;

  /// Validates and wraps at construction: |lat| <= pi/2, lon in (-pi, pi],
  /// all fields finite. Throws std::domain_error otherwise.
  static GeodeticPosition make(double lat, double lon, double height);
};

/// Roll/pitch/yaw in radians, ZYX convention about the NED axes.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  /// Wraps roll and yaw to (-pi, pi]; pitch must stay clear of the
  /// gimbal-lock exclusion zone |pitch| < pi/2 - kGimbalLockMargin.
  static EulerAngles make(double roll, double pitch, double yaw);

  Eigen::Vector3d vec() const { return {roll, pitch, yaw}; }
};

inline constexpr double kGimbalLockMargin = 1e-6;

/// Reference ellipsoid constants plus the normal-gravity model.
struct EarthModel {
  double semi_major_axis;    // a [m]
  double eccentricity_sq;    // e^2
  double earth_rate;         // omega_e [rad/s]
  double gravity_equator;    // Somigliana gamma_e [m/s^2]
  double somigliana_k;       // Somigliana k
  double free_air;           // linear free-air gradient [m/s^2 per m]

  static EarthModel wgs84();

  /// WGS84 with earth rotation disabled; used in tests to isolate
  /// integrator behavior from earth-rate effects.
  static EarthModel wgs84_non_rotating();

  detail::EarthParams params() const {
    return {semi_major_axis, eccentricity_sq, earth_rate,
            gravity_equator, somigliana_k, free_air};
  }
};

/// Meridian (R_M) and transverse (R_N) radii of curvature at a latitude.
struct RadiiOfCurvature {
  double meridian;
  double transverse;
};
RadiiOfCurvature radii_of_curvature(double lat, const EarthModel& model);

/// d(R_M)/dlat and d(R_N)/dlat, needed when differentiating trajectories
/// expressed through the geodetic chart.
RadiiOfCurvature radii_of_curvature_dlat(double lat, const EarthModel& model);

/// Skew-symmetric matrix such that skew(w) * v == w x v.
Eigen::Matrix3d skew(const Eigen::Vector3d& omega);

/// Body-to-NED direction cosine matrix from Euler angles.
Eigen::Matrix3d dcm_from_euler(const EulerAngles& eta);

/// Inverse of dcm_from_euler. Requires |c(2,0)| < 1 - 1e-9 (away from
/// gimbal lock); throws std::domain_error otherwise.
EulerAngles euler_from_dcm(const Eigen::Matrix3d& c);

/// Earth rotation rate expressed in NED: [w_e cos(lat), 0, -w_e sin(lat)].
Eigen::Vector3d earth_rate_n(double lat, const EarthModel& model);

/// Transport rate of the NED frame over the ellipsoid due to vehicle
/// velocity. Throws std::domain_error within 1e-6 rad of the poles.
Eigen::Vector3d transport_rate(const Eigen::Vector3d& v_ned, double lat,
                               double h, const EarthModel& model);

/// Normal gravity vector in NED (positive down), Somigliana plus linear
/// free-air correction.
Eigen::Vector3d gravity_n(double lat, double h, const EarthModel& model);

/// Diagonal matrix mapping NED velocity to geodetic position rates:
/// diag(1/(R_M+h), 1/((R_N+h) cos lat), -1).
Eigen::Matrix3d d_matrix(double lat, double h, const EarthModel& model);

/// Max elementwise deviation of c^T c from identity.
double orthonormality_error(const Eigen::Matrix3d& c);

/// Gram-Schmidt re-orthogonalization of a near-rotation matrix.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& c);

}  // namespace pidr
