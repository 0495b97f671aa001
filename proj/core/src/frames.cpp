#include "pidr/frames.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pidr {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPoleMargin = 1e-6;

Eigen::Matrix3d to_eigen(const detail::M3<double>& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = m[i][j];
  }
  return r;
}
}  // namespace

double wrap_pi(double angle) {
  double y = std::fmod(angle + kPi, 2.0 * kPi);
  if (y <= 0.0) y += 2.0 * kPi;
  return y - kPi;
}

GeodeticPosition GeodeticPosition::make(double lat, double lon, double height) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || !std::isfinite(height)) {
    throw std::domain_error("GeodeticPosition: non-finite field");
  }
  if (std::abs(lat) > kPi / 2.0) {
    throw std::domain_error("GeodeticPosition: |lat| > pi/2");
  }
  return {lat, wrap_pi(lon), height};
}

EulerAngles EulerAngles::make(double roll, double pitch, double yaw) {
  if (!std::isfinite(roll) || !std::isfinite(pitch) || !std::isfinite(yaw)) {
    throw std::domain_error("EulerAngles: non-finite field");
  }
  if (std::abs(pitch) >= kPi / 2.0 - kGimbalLockMargin) {
    throw std::domain_error("EulerAngles: pitch inside gimbal-lock zone");
  }
  return {wrap_pi(roll), pitch, wrap_pi(yaw)};
}

EarthModel EarthModel::wgs84() {
  // WGS84 defining constants; Somigliana gamma_e/k and the free-air
  // gradient follow standard geodesy values.
  return {6378137.0, 0.00669437999014, 7.2921158e-5,
          9.7803253359, 0.00193185265241, 3.0877e-6};
}

EarthModel EarthModel::wgs84_non_rotating() {
  EarthModel m = wgs84();
  m.earth_rate = 0.0;
  return m;
}

RadiiOfCurvature radii_of_curvature(double lat, const EarthModel& model) {
  if (!std::isfinite(lat)) {
    throw std::domain_error("radii_of_curvature: non-finite latitude");
  }
  if (std::abs(lat) > kPi / 2.0) {
    throw std::domain_error("radii_of_curvature: |lat| > pi/2");
  }
  const auto p = model.params();
  return {detail::meridian_radius(lat, p), detail::transverse_radius(lat, p)};
}

RadiiOfCurvature radii_of_curvature_dlat(double lat, const EarthModel& model) {
  const double a = model.semi_major_axis;
  const double e2 = model.eccentricity_sq;
  const double s = std::sin(lat);
  const double c = std::cos(lat);
  const double w = 1.0 - e2 * s * s;
  const double d_rm = 3.0 * a * (1.0 - e2) * e2 * s * c / std::pow(w, 2.5);
  const double d_rn = a * e2 * s * c / std::pow(w, 1.5);
  return {d_rm, d_rn};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& omega) {
  if (!omega.allFinite()) {
    throw std::domain_error("skew: non-finite components");
  }
  return to_eigen(detail::skew<double>({omega.x(), omega.y(), omega.z()}));
}

Eigen::Matrix3d dcm_from_euler(const EulerAngles& eta) {
  if (std::abs(eta.pitch) >= kPi / 2.0 - kGimbalLockMargin) {
    throw std::domain_error("dcm_from_euler: pitch inside gimbal-lock zone");
  }
  return to_eigen(detail::dcm_from_euler(eta.roll, eta.pitch, eta.yaw));
}

EulerAngles euler_from_dcm(const Eigen::Matrix3d& c) {
  if (std::abs(c(2, 0)) >= 1.0 - 1e-9) {
    throw std::domain_error("euler_from_dcm: pitch too close to gimbal lock");
  }
  EulerAngles eta;
  eta.pitch = -std::asin(c(2, 0));
  eta.roll = std::atan2(c(2, 1), c(2, 2));
  eta.yaw = std::atan2(c(1, 0), c(0, 0));
  return eta;
}

Eigen::Vector3d earth_rate_n(double lat, const EarthModel& model) {
  const auto w = detail::earth_rate_n(lat, model.params());
  return {w[0], w[1], w[2]};
}

Eigen::Vector3d transport_rate(const Eigen::Vector3d& v_ned, double lat,
                               double h, const EarthModel& model) {
  if (std::abs(lat) >= kPi / 2.0 - kPoleMargin) {
    throw std::domain_error("transport_rate: latitude too close to pole");
  }
  const auto w = detail::transport_rate<double>(
      {v_ned.x(), v_ned.y(), v_ned.z()}, lat, h, model.params());
  return {w[0], w[1], w[2]};
}

Eigen::Vector3d gravity_n(double lat, double h, const EarthModel& model) {
  const auto g = detail::gravity_n(lat, h, model.params());
  return {g[0], g[1], g[2]};
}

Eigen::Matrix3d d_matrix(double lat, double h, const EarthModel& model) {
  if (std::abs(lat) >= kPi / 2.0 - kPoleMargin) {
    throw std::domain_error("d_matrix: latitude too close to pole");
  }
  const auto r = radii_of_curvature(lat, model);
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(0, 0) = 1.0 / (r.meridian + h);
  d(1, 1) = 1.0 / ((r.transverse + h) * std::cos(lat));
  d(2, 2) = -1.0;
  return d;
}

double orthonormality_error(const Eigen::Matrix3d& c) {
  return (c.transpose() * c - Eigen::Matrix3d::Identity())
      .cwiseAbs()
      .maxCoeff();
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& c) {
  Eigen::Vector3d c0 = c.col(0).normalized();
  Eigen::Vector3d c1 = (c.col(1) - c.col(1).dot(c0) * c0).normalized();
  Eigen::Vector3d c2 = c0.cross(c1);
  Eigen::Matrix3d r;
  r.col(0) = c0;
  r.col(1) = c1;
  r.col(2) = c2;
  return r;
}

}  // namespace pidr
