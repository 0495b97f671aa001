#pragma once

#include <array>
#include <cmath>

// Scalar-generic strapdown kinematics kernels. Instantiated with double by
// the frames module and with the reverse-mode Var by the physics loss, so
// both paths evaluate the exact same formulas.

namespace pidr::detail {

template <class S>
using V3 = std::array<S, 3>;
template <class S>
using M3 = std::array<std::array<S, 3>, 3>;

template <class S>
V3<S> cross(const V3<S>& a, const V3<S>& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

template <class S>
V3<S> sub(const V3<S>& a, const V3<S>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <class S>
V3<S> add(const V3<S>& a, const V3<S>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

template <class S>
M3<S> skew(const V3<S>& w) {
  return {{{S(0.0), S(0.0) - w[2], w[1]},
           {w[2], S(0.0), S(0.0) - w[0]},
           {S(0.0) - w[1], w[0], S(0.0)}}};
}

template <class S>
V3<S> mat_vec(const M3<S>& m, const V3<S>& v) {
  V3<S> r;
  for (int i = 0; i < 3; ++i) {
    r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  }
  return r;
}

template <class S>
V3<S> mat_t_vec(const M3<S>& m, const V3<S>& v) {
  V3<S> r;
  for (int i = 0; i < 3; ++i) {
    r[i] = m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2];
  }
  return r;
}

template <class S>
M3<S> mat_mul(const M3<S>& a, const M3<S>& b) {
  M3<S> r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return r;
}

template <class S>
M3<S> mat_sub(const M3<S>& a, const M3<S>& b) {
  M3<S> r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][j] - b[i][j];
  }
  return r;
}

/// Body-to-navigation DCM from ZYX (yaw-pitch-roll) Euler angles.
/// Columns are the body axes expressed in NED.
template <class S>
M3<S> dcm_from_euler(const S& roll, const S& pitch, const S& yaw) {
  using std::cos;
  using std::sin;
  const S cphi = cos(roll), sphi = sin(roll);
  const S cth = cos(pitch), sth = sin(pitch);
  const S cpsi = cos(yaw), spsi = sin(yaw);
  M3<S> c;
  c[0][0] = cth * cpsi;
  c[0][1] = sphi * sth * cpsi - cphi * spsi;
  c[0][2] = cphi * sth * cpsi + sphi * spsi;
  c[1][0] = cth * spsi;
  c[1][1] = sphi * sth * spsi + cphi * cpsi;
  c[1][2] = cphi * sth * spsi - sphi * cpsi;
  c[2][0] = S(0.0) - sth;
  c[2][1] = sphi * cth;
  c[2][2] = cphi * cth;
  return c;
}

/// d(DCM)/dt given Euler angles and their rates, by the chain rule through
/// each trigonometric entry.
template <class S>
M3<S> dcm_rate_from_euler(const S& roll, const S& pitch, const S& yaw,
                          const S& roll_dot, const S& pitch_dot,
                          const S& yaw_dot) {
  using std::cos;
  using std::sin;
  const S cphi = cos(roll), sphi = sin(roll);
  const S cth = cos(pitch), sth = sin(pitch);
  const S cpsi = cos(yaw), spsi = sin(yaw);
  const S dphi = roll_dot, dth = pitch_dot, dpsi = yaw_dot;

  // Entry-wise time derivatives of dcm_from_euler.
  M3<S> d;
  d[0][0] = (S(0.0) - sth) * dth * cpsi - cth * spsi * dpsi;
  d[0][1] = cphi * dphi * sth * cpsi + sphi * cth * dth * cpsi -
            sphi * sth * spsi * dpsi + sphi * dphi * spsi - cphi * cpsi * dpsi;
  d[0][2] = (S(0.0) - sphi) * dphi * sth * cpsi + cphi * cth * dth * cpsi -
            cphi * sth * spsi * dpsi + cphi * dphi * spsi + sphi * cpsi * dpsi;
  d[1][0] = (S(0.0) - sth) * dth * spsi + cth * cpsi * dpsi;
  d[1][1] = cphi * dphi * sth * spsi + sphi * cth * dth * spsi +
            sphi * sth * cpsi * dpsi - sphi * dphi * cpsi - cphi * spsi * dpsi;
  d[1][2] = (S(0.0) - sphi) * dphi * sth * spsi + cphi * cth * dth * spsi +
            cphi * sth * cpsi * dpsi - cphi * dphi * cpsi + sphi * spsi * dpsi;
  d[2][0] = S(0.0) - cth * dth;
  d[2][1] = cphi * dphi * cth - sphi * sth * dth;
  d[2][2] = (S(0.0) - sphi) * dphi * cth - cphi * sth * dth;
  return d;
}

/// Body angular rate of the body frame w.r.t. the navigation frame from
/// Euler angle rates (the standard Euler kinematics inverse).
template <class S>
V3<S> body_rate_from_euler_rates(const S& roll, const S& pitch,
                                 const S& roll_dot, const S& pitch_dot,
                                 const S& yaw_dot) {
  using std::cos;
  using std::sin;
  const S cphi = cos(roll), sphi = sin(roll);
  const S cth = cos(pitch), sth = sin(pitch);
  return {roll_dot - yaw_dot * sth,
          pitch_dot * cphi + yaw_dot * cth * sphi,
          yaw_dot * cth * cphi - pitch_dot * sphi};
}

struct EarthParams {
  double semi_major_axis;
  double eccentricity_sq;
  double earth_rate;
  double gravity_equator;
  double somigliana_k;
  double free_air;
};

template <class S>
S meridian_radius(const S& lat, const EarthParams& e) {
  using std::sin;
  using std::sqrt;
  const S s = sin(lat);
  const S w = S(1.0) - e.eccentricity_sq * s * s;
  return e.semi_major_axis * (1.0 - e.eccentricity_sq) / (w * sqrt(w));
}

template <class S>
S transverse_radius(const S& lat, const EarthParams& e) {
  using std::sin;
  using std::sqrt;
  const S s = sin(lat);
  return e.semi_major_axis / sqrt(S(1.0) - e.eccentricity_sq * s * s);
}

template <class S>
V3<S> earth_rate_n(const S& lat, const EarthParams& e) {
  using std::cos;
  using std::sin;
  return {e.earth_rate * cos(lat), S(0.0), S(0.0) - e.earth_rate * sin(lat)};
}

template <class S>
V3<S> transport_rate(const V3<S>& v_ned, const S& lat, const S& h,
                     const EarthParams& e) {
  using std::tan;
  const S rm = meridian_radius(lat, e);
  const S rn = transverse_radius(lat, e);
  return {v_ned[1] / (rn + h),
          S(0.0) - v_ned[0] / (rm + h),
          S(0.0) - v_ned[1] * tan(lat) / (rn + h)};
}

/// Somigliana normal gravity with a linear free-air height correction,
/// positive down.
template <class S>
S gravity_down(const S& lat, const S& h, const EarthParams& e) {
  using std::sin;
  using std::sqrt;
  const S s = sin(lat);
  const S s2 = s * s;
  const S g0 = e.gravity_equator * (S(1.0) + e.somigliana_k * s2) /
               sqrt(S(1.0) - e.eccentricity_sq * s2);
  return g0 - e.free_air * h;
}

template <class S>
V3<S> gravity_n(const S& lat, const S& h, const EarthParams& e) {
  return {S(0.0), S(0.0), gravity_down(lat, h, e)};
}

}  // namespace pidr::detail
