#include "pidr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pidr/dataset.hpp"
#include "pidr/detail/kin.hpp"
#include "pidr/rng.hpp"

namespace pidr {

namespace {

constexpr double kTimeSlack = 1e-9;

// Quintic smoothstep and its integral; q has zero first and second
// derivatives at both ends, so blended velocities give C2 positions.
double qstep(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double qstep_dot(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double qstep_int(double x) {
  return x * x * x * x * (2.5 + x * (-3.0 + x));
}

double median_dt(std::span<const ImuSample> imu) {
  std::vector<double> dts;
  dts.reserve(imu.size());
  for (std::size_t i = 1; i < imu.size(); ++i) {
    dts.push_back(imu[i].t - imu[i - 1].t);
  }
  if (dts.empty()) {
    throw std::invalid_argument("need at least two samples to infer rate");
  }
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  return dts[dts.size() / 2];
}

}  // namespace

void MotionProfile::validate() const {
  if (!(speed >= 0.0) || !std::isfinite(speed)) {
    throw std::invalid_argument("profile: speed must be >= 0");
  }
  if (!(duration > 0.0)) {
    throw std::invalid_argument("profile: duration must be > 0");
  }
  if (!(imu_rate > 0.0) || !(gt_rate > 0.0) || imu_rate < gt_rate) {
    throw std::invalid_argument("profile: need imu_rate >= gt_rate > 0");
  }
  if (!(corner_time > 0.0)) {
    throw std::invalid_argument("profile: corner_time must be > 0");
  }
  switch (kind) {
    case ProfileKind::circle:
      if (!(radius > 0.0)) {
        throw std::invalid_argument("profile: radius must be > 0");
      }
      break;
    case ProfileKind::rectangle:
      if (!(leg_north > 0.0) || !(leg_east > 0.0)) {
        throw std::invalid_argument("profile: rectangle legs must be > 0");
      }
      break;
    case ProfileKind::lawnmower:
      if (!(leg_length > 0.0) || !(spacing > 0.0)) {
        throw std::invalid_argument(
            "profile: lawnmower leg_length and spacing must be > 0");
      }
      break;
    case ProfileKind::straight_dive:
      if (!std::isfinite(dive_rate)) {
        throw std::invalid_argument("profile: dive_rate must be finite");
      }
      break;
  }
}

SensorErrorModel SensorErrorModel::xsens_dot(std::uint64_t seed) {
  constexpr double g0 = 9.80665;
  constexpr double deg = std::numbers::pi / 180.0;
  SensorErrorModel m;
  m.accel_bias = Eigen::Vector3d::Constant(0.03e-3 * g0);
  m.gyro_bias = Eigen::Vector3d::Constant(10.0 * deg / 3600.0);
  m.accel_noise_density = 120e-6 * g0;
  m.gyro_noise_density = 0.007 * deg;
  m.seed = seed;
  return m;
}

void SensorErrorModel::validate() const {
  if (accel_noise_density < 0.0 || gyro_noise_density < 0.0) {
    throw std::invalid_argument("sensor error model: densities must be >= 0");
  }
}

PathModel::PathModel(const MotionProfile& profile) : profile_(profile) {
  profile_.validate();
  if (profile_.kind == ProfileKind::circle || profile_.speed == 0.0) {
    return;  // closed form / static hold, no segments
  }

  const double s = profile_.speed;
  const double tc = profile_.corner_time;
  const Eigen::Vector3d north(s, 0.0, 0.0);
  const Eigen::Vector3d east(0.0, s, 0.0);
  const Eigen::Vector3d south(-s, 0.0, 0.0);
  const Eigen::Vector3d west(0.0, -s, 0.0);

  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = north;

  auto straight = [&](double dur) {
    if (dur <= 0.0) return;
    segments_.push_back({t, t + dur, p, v, v});
    p += v * dur;
    t += dur;
  };
  auto blend_to = [&](const Eigen::Vector3d& v_new) {
    segments_.push_back({t, t + tc, p, v, v_new});
    p += v * tc + (v_new - v) * tc * qstep_int(1.0);
    v = v_new;
    t += tc;
  };

  const double t_stop = profile_.duration + 1.0;
  switch (profile_.kind) {
    case ProfileKind::rectangle: {
      const double tn = profile_.leg_north / s;
      const double te = profile_.leg_east / s;
      while (t < t_stop) {
        straight(tn);
        blend_to(east);
        straight(te);
        blend_to(south);
        straight(tn);
        blend_to(west);
        straight(te);
        blend_to(north);
      }
      break;
    }
    case ProfileKind::lawnmower: {
      const double tl = profile_.leg_length / s;
      const double ts = profile_.spacing / s;
      bool heading_north = true;
      while (t < t_stop) {
        straight(tl);
        blend_to(east);
        straight(ts);
        blend_to(heading_north ? south : north);
        heading_north = !heading_north;
      }
      break;
    }
    case ProfileKind::straight_dive: {
      const Eigen::Vector3d dive(s, 0.0, profile_.dive_rate);
      straight(0.25 * profile_.duration);
      blend_to(dive);
      straight(0.4 * profile_.duration);
      blend_to(north);
      straight(t_stop - t + 1.0);
      break;
    }
    case ProfileKind::circle:
      break;
  }
}

AnalyticState PathModel::circle_state(double t) const {
  const double s = profile_.speed;
  const double r = profile_.radius;
  const double w = s / r;
  const double th = w * t;
  AnalyticState out;
  out.p = {r * std::sin(th), r * (1.0 - std::cos(th)), 0.0};
  out.v = {s * std::cos(th), s * std::sin(th), 0.0};
  out.a = {-s * w * std::sin(th), s * w * std::cos(th), 0.0};
  out.eta = EulerAngles::make(0.0, 0.0, wrap_pi(th));
  out.eta_dot = {0.0, 0.0, w};
  return out;
}

AnalyticState PathModel::segment_state(double t) const {
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double value, const Segment& seg) { return value < seg.t0; });
  if (it != segments_.begin()) --it;
  const Segment& seg = *it;
  const double tau_span = seg.t1 - seg.t0;
  const double dt = std::clamp(t - seg.t0, 0.0, tau_span);

  AnalyticState out;
  if ((seg.v1 - seg.v0).norm() == 0.0) {
    out.p = seg.p0 + seg.v0 * dt;
    out.v = seg.v0;
    out.a = Eigen::Vector3d::Zero();
  } else {
    const double x = dt / tau_span;
    const Eigen::Vector3d dv = seg.v1 - seg.v0;
    out.p = seg.p0 + seg.v0 * dt + dv * tau_span * qstep_int(x);
    out.v = seg.v0 + dv * qstep(x);
    out.a = dv * qstep_dot(x) / tau_span;
  }

  const double vn = out.v.x(), ve = out.v.y();
  const double h2 = vn * vn + ve * ve;
  const double yaw = std::atan2(ve, vn);
  const double yaw_dot = (vn * out.a.y() - ve * out.a.x()) / h2;
  out.eta = EulerAngles::make(0.0, 0.0, yaw);
  out.eta_dot = {0.0, 0.0, yaw_dot};
  return out;
}

AnalyticState PathModel::analytic_state(double t) const {
  if (t < -kTimeSlack || t > profile_.duration + kTimeSlack) {
    throw std::domain_error("analytic_state: t outside [0, duration]");
  }
  if (profile_.speed == 0.0) {
    return AnalyticState{};  // static hold at the origin, level, yaw 0
  }
  if (profile_.kind == ProfileKind::circle) return circle_state(t);
  return segment_state(t);
}

ExactNavState PathModel::exact_state(double t, const EarthModel& model) const {
  const AnalyticState s = analytic_state(t);
  const GeodeticPosition& o = profile_.origin;
  const auto r0 = radii_of_curvature(o.lat, model);
  const double km = r0.meridian + o.height;
  const double kn = (r0.transverse + o.height) * std::cos(o.lat);

  ExactNavState out;
  out.p_ned = s.p;
  out.eta = s.eta;
  out.eta_dot = s.eta_dot;
  out.position = {o.lat + s.p.x() / km, wrap_pi(o.lon + s.p.y() / kn),
                  o.height - s.p.z()};

  // Geodetic rates through the linear chart, then the exact mechanization
  // velocity including the latitude dependence of the radii.
  const double lat = out.position.lat;
  const double h = out.position.height;
  const double lat_dot = s.v.x() / km;
  const double lon_dot = s.v.y() / kn;
  const double h_dot = -s.v.z();
  const double lat_ddot = s.a.x() / km;
  const double lon_ddot = s.a.y() / kn;
  const double h_ddot = -s.a.z();

  const auto r = radii_of_curvature(lat, model);
  const auto dr = radii_of_curvature_dlat(lat, model);
  const double sl = std::sin(lat), cl = std::cos(lat);

  out.v_n.x() = lat_dot * (r.meridian + h);
  out.v_n.y() = lon_dot * (r.transverse + h) * cl;
  out.v_n.z() = -h_dot;

  out.vdot_n.x() =
      lat_ddot * (r.meridian + h) + lat_dot * (dr.meridian * lat_dot + h_dot);
  out.vdot_n.y() =
      lon_ddot * (r.transverse + h) * cl +
      lon_dot * ((dr.transverse * lat_dot + h_dot) * cl -
                 (r.transverse + h) * sl * lat_dot);
  out.vdot_n.z() = -h_ddot;
  return out;
}

ImuSample PathModel::imu_at(double t, const EarthModel& model) const {
  const ExactNavState s = exact_state(t, model);
  const double lat = s.position.lat;
  const double h = s.position.height;

  const Eigen::Matrix3d c = dcm_from_euler(s.eta);
  const Eigen::Vector3d w_ie = earth_rate_n(lat, model);
  const Eigen::Vector3d w_en = transport_rate(s.v_n, lat, h, model);
  const Eigen::Vector3d g = gravity_n(lat, h, model);

  const auto w_nb = detail::body_rate_from_euler_rates(
      s.eta.roll, s.eta.pitch, s.eta_dot.x(), s.eta_dot.y(), s.eta_dot.z());

  ImuSample out;
  out.t = t;
  out.specific_force =
      c.transpose() * (s.vdot_n + (2.0 * w_ie + w_en).cross(s.v_n) - g);
  out.angular_rate = c.transpose() * (w_ie + w_en) +
                     Eigen::Vector3d(w_nb[0], w_nb[1], w_nb[2]);
  return out;
}

NavState PathModel::initial_nav_state(const EarthModel& model) const {
  const ExactNavState s = exact_state(0.0, model);
  NavState out;
  out.position = s.position;
  out.velocity = s.v_n;
  out.attitude = dcm_from_euler(s.eta);
  return out;
}

Trajectory PathModel::ground_truth(const EarthModel& model) const {
  (void)model;
  Trajectory traj;
  traj.frame = TrajectoryFrame::local_ned;
  traj.origin = profile_.origin;
  const auto n = static_cast<std::size_t>(
      std::llround(profile_.duration * profile_.gt_rate));
  traj.rows.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / profile_.gt_rate;
    const AnalyticState s = analytic_state(t);
    Trajectory::Row row;
    row.t = t;
    row.position = s.p;
    row.velocity = s.v;
    row.euler = s.eta.vec();
    traj.rows.push_back(row);
  }
  return traj;
}

std::vector<ImuSample> inverse_mechanization(const PathModel& path,
                                             const EarthModel& model) {
  const MotionProfile& p = path.profile();
  const auto n =
      static_cast<std::size_t>(std::llround(p.duration * p.imu_rate));
  std::vector<ImuSample> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    out.push_back(path.imu_at(static_cast<double>(i) / p.imu_rate, model));
  }
  return out;
}

std::vector<ImuSample> corrupt(std::span<const ImuSample> imu,
                               const SensorErrorModel& errors) {
  errors.validate();
  std::vector<ImuSample> out(imu.begin(), imu.end());
  const bool noisy =
      errors.accel_noise_density > 0.0 || errors.gyro_noise_density > 0.0;
  double accel_sigma = 0.0;
  double gyro_sigma = 0.0;
  if (noisy) {
    const double rate = 1.0 / median_dt(imu);
    accel_sigma = errors.accel_noise_density * std::sqrt(rate);
    gyro_sigma = errors.gyro_noise_density * std::sqrt(rate);
  }
  RngStream accel_rng = RngStream::derive(errors.seed, "accel-noise");
  RngStream gyro_rng = RngStream::derive(errors.seed, "gyro-noise");
  for (auto& s : out) {
    s.specific_force += errors.accel_bias;
    s.angular_rate += errors.gyro_bias;
    if (noisy) {
      for (int k = 0; k < 3; ++k) {
        s.specific_force[k] += accel_sigma * accel_rng.next_normal();
        s.angular_rate[k] += gyro_sigma * gyro_rng.next_normal();
      }
    }
  }
  return out;
}

EmittedDataset emit_dataset(const PathModel& path,
                            const SensorErrorModel& errors,
                            const std::filesystem::path& out_dir,
                            const EarthModel& model) {
  std::filesystem::create_directories(out_dir);
  const std::vector<ImuSample> ideal = inverse_mechanization(path, model);
  const std::vector<ImuSample> measured = corrupt(ideal, errors);

  const MotionProfile& p = path.profile();
  const auto n_gt =
      static_cast<std::size_t>(std::llround(p.duration * p.gt_rate));
  std::vector<GtRow> gt;
  gt.reserve(n_gt + 1);
  for (std::size_t i = 0; i <= n_gt; ++i) {
    const double t = static_cast<double>(i) / p.gt_rate;
    const AnalyticState s = path.analytic_state(t);
    gt.push_back({t, s.p, s.v, s.eta.vec()});
  }

  EmittedDataset files{out_dir / "imu.csv", out_dir / "gt.csv",
                       out_dir / "meta.txt"};
  write_imu_csv(files.imu_csv, measured);
  write_gt_csv(files.gt_csv, gt);
  write_meta(files.meta, DatasetMeta{p.origin});
  return files;
}

}  // namespace pidr
