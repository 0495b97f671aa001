#include "pidr/mechanization.hpp"

#include <cmath>
#include <stdexcept>

namespace pidr {

double Trajectory::path_length() const {
  double d = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    d += (rows[i].position.head<2>() - rows[i - 1].position.head<2>()).norm();
  }
  return d;
}

NavDerivative nav_derivative(const NavState& state, const ImuSample& imu,
                             const EarthModel& model) {
  const double lat = state.position.lat;
  const double h = state.position.height;
  const Eigen::Vector3d& v = state.velocity;
  const Eigen::Matrix3d& c = state.attitude;

  const Eigen::Matrix3d d = d_matrix(lat, h, model);
  const Eigen::Vector3d w_ie = earth_rate_n(lat, model);
  const Eigen::Vector3d w_en = transport_rate(v, lat, h, model);
  const Eigen::Vector3d g = gravity_n(lat, h, model);

  NavDerivative out;
  out.position_rate = d * v;
  out.velocity_rate =
      c * imu.specific_force - (2.0 * w_ie + w_en).cross(v) + g;
  out.attitude_rate =
      c * skew(imu.angular_rate) - (skew(w_ie) + skew(w_en)) * c;
  return out;
}

namespace {

struct StateVec {
  Eigen::Vector3d p;  // lat, lon, h
  Eigen::Vector3d v;
  Eigen::Matrix3d c;
};

StateVec axpy(const StateVec& s, double a, const NavDerivative& d) {
  return {s.p + a * d.position_rate, s.v + a * d.velocity_rate,
          s.c + a * d.attitude_rate};
}

NavState to_state(const StateVec& s) {
  NavState out;
  out.position = {s.p.x(), s.p.y(), s.p.z()};
  out.velocity = s.v;
  out.attitude = s.c;
  return out;
}

NavDerivative eval(const StateVec& s, const ImuSample& imu,
                   const EarthModel& model) {
  return nav_derivative(to_state(s), imu, model);
}

}  // namespace

namespace {

/// One step of RK4 (or explicit Euler) with the input signal supplied as a
/// function of time; substeps sample it at t0, t0 + dt/2 and t0 + dt.
template <class ImuFn>
NavState step_with_input(const NavState& state, const ImuFn& imu_at,
                         double t0, double dt, IntegrationScheme scheme,
                         const EarthModel& model) {
  const StateVec s0{{state.position.lat, state.position.lon,
                     state.position.height},
                    state.velocity,
                    state.attitude};

  StateVec s1;
  if (scheme == IntegrationScheme::euler) {
    const NavDerivative k1 = eval(s0, imu_at(t0), model);
    s1 = axpy(s0, dt, k1);
  } else {
    const ImuSample u_mid = imu_at(t0 + 0.5 * dt);
    const NavDerivative k1 = eval(s0, imu_at(t0), model);
    const NavDerivative k2 = eval(axpy(s0, 0.5 * dt, k1), u_mid, model);
    const NavDerivative k3 = eval(axpy(s0, 0.5 * dt, k2), u_mid, model);
    const NavDerivative k4 = eval(axpy(s0, dt, k3), imu_at(t0 + dt), model);
    s1 = s0;
    s1.p += (dt / 6.0) * (k1.position_rate + 2.0 * k2.position_rate +
                          2.0 * k3.position_rate + k4.position_rate);
    s1.v += (dt / 6.0) * (k1.velocity_rate + 2.0 * k2.velocity_rate +
                          2.0 * k3.velocity_rate + k4.velocity_rate);
    s1.c += (dt / 6.0) * (k1.attitude_rate + 2.0 * k2.attitude_rate +
                          2.0 * k3.attitude_rate + k4.attitude_rate);
  }

  NavState out = to_state(s1);
  out.attitude = orthonormalize(out.attitude);
  out.position.lon = wrap_pi(out.position.lon);
  return out;
}

/// Polynomial IMU reconstruction over a window of samples, evaluated by
/// Lagrange interpolation on the actual timestamps.
ImuSample lagrange_imu(std::span<const ImuSample> pts, double t) {
  ImuSample out;
  out.t = t;
  out.specific_force.setZero();
  out.angular_rate.setZero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j == i) continue;
      w *= (t - pts[j].t) / (pts[i].t - pts[j].t);
    }
    out.specific_force += w * pts[i].specific_force;
    out.angular_rate += w * pts[i].angular_rate;
  }
  return out;
}

}  // namespace

NavState integrate_step(const NavState& state, const ImuSample& imu,
                        double dt, IntegrationScheme scheme,
                        const EarthModel& model) {
  if (!(dt > 0.0) || dt > 0.1 + 1e-12) {
    throw std::domain_error("integrate_step: dt must be in (0, 0.1] s");
  }
  return step_with_input(
      state, [&imu](double) { return imu; }, imu.t, dt, scheme, model);
}

Trajectory dead_reckon(const NavState& init, std::span<const ImuSample> imu,
                       const DeadReckonOptions& opts,
                       const EarthModel& model) {
  if (imu.size() < 2) {
    throw std::invalid_argument("dead_reckon: need at least 2 IMU samples");
  }
  for (std::size_t i = 1; i < imu.size(); ++i) {
    if (!(imu[i].t > imu[i - 1].t)) {
      throw std::invalid_argument("dead_reckon: non-monotone timestamps");
    }
  }

  Trajectory traj;
  traj.frame = TrajectoryFrame::geodetic;
  traj.origin = init.position;
  traj.rows.reserve(imu.size());

  NavState state = init;
  if (opts.mode_2d) state.velocity.z() = 0.0;

  auto append = [&traj](double t, const NavState& s) {
    Trajectory::Row row;
    row.t = t;
    row.position = {s.position.lat, s.position.lon, s.position.height};
    row.velocity = s.velocity;
    const EulerAngles eta = euler_from_dcm(s.attitude);
    row.euler = {eta.roll, eta.pitch, eta.yaw};
    traj.rows.push_back(row);
  };

  const bool cubic = opts.hold == ImuHold::cubic && imu.size() >= 4;
  const bool foh = opts.hold == ImuHold::foh ||
                   (opts.hold == ImuHold::cubic && !cubic);

  append(imu[0].t, state);
  for (std::size_t i = 1; i < imu.size(); ++i) {
    const double dt = imu[i].t - imu[i - 1].t;
    if (!(dt > 0.0) || dt > 0.1 + 1e-12) {
      throw std::domain_error("dead_reckon: sample spacing outside (0, 0.1] s");
    }
    const std::size_t k = i - 1;
    auto input = [&](double t) -> ImuSample {
      if (cubic) {
        const std::size_t w = std::min(k >= 1 ? k - 1 : 0, imu.size() - 4);
        return lagrange_imu(imu.subspan(w, 4), t);
      }
      if (foh) {
        return lagrange_imu(imu.subspan(k, 2), t);
      }
      return imu[k];
    };
    state = step_with_input(state, input, imu[k].t, dt, opts.scheme, model);
    if (opts.mode_2d) state.velocity.z() = 0.0;
    append(imu[i].t, state);
  }
  return traj;
}

Eigen::Vector3d geodetic_to_ned_point(const GeodeticPosition& p,
                                      const GeodeticPosition& origin,
                                      const EarthModel& model) {
  const auto r = radii_of_curvature(origin.lat, model);
  const double km = r.meridian + origin.height;
  const double kn = (r.transverse + origin.height) * std::cos(origin.lat);
  return {(p.lat - origin.lat) * km, (p.lon - origin.lon) * kn,
          -(p.height - origin.height)};
}

GeodeticPosition ned_to_geodetic_point(const Eigen::Vector3d& ned,
                                       const GeodeticPosition& origin,
                                       const EarthModel& model) {
  const auto r = radii_of_curvature(origin.lat, model);
  const double km = r.meridian + origin.height;
  const double kn = (r.transverse + origin.height) * std::cos(origin.lat);
  GeodeticPosition p;
  p.lat = origin.lat + ned.x() / km;
  p.lon = origin.lon + ned.y() / kn;
  p.height = origin.height - ned.z();
  return p;
}

Trajectory geodetic_to_local_ned(const Trajectory& traj,
                                 const GeodeticPosition& origin,
                                 const EarthModel& model) {
  if (traj.frame != TrajectoryFrame::geodetic) {
    throw std::invalid_argument(
        "geodetic_to_local_ned: trajectory is not geodetic");
  }
  Trajectory out;
  out.frame = TrajectoryFrame::local_ned;
  out.origin = origin;
  out.rows.reserve(traj.rows.size());
  for (const auto& row : traj.rows) {
    Trajectory::Row r = row;
    const GeodeticPosition p{row.position.x(), row.position.y(),
                             row.position.z()};
    r.position = geodetic_to_ned_point(p, origin, model);
    out.rows.push_back(r);
  }
  return out;
}

Trajectory local_ned_to_geodetic(const Trajectory& traj,
                                 const EarthModel& model) {
  if (traj.frame != TrajectoryFrame::local_ned) {
    throw std::invalid_argument(
        "local_ned_to_geodetic: trajectory is not local NED");
  }
  Trajectory out;
  out.frame = TrajectoryFrame::geodetic;
  out.origin = traj.origin;
  out.rows.reserve(traj.rows.size());
  for (const auto& row : traj.rows) {
    Trajectory::Row r = row;
    const GeodeticPosition p =
        ned_to_geodetic_point(row.position, traj.origin, model);
    r.position = {p.lat, p.lon, p.height};
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace pidr
