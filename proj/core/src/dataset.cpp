#include "pidr/dataset.hpp"

#include "pidr/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace pidr {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_row(const std::string& line,
                              std::size_t expected_fields,
                              const std::filesystem::path& path,
                              std::size_t line_no) {
  std::vector<double> fields;
  fields.reserve(expected_fields);
  const char* p = line.c_str();
  while (true) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p || errno != 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed numeric field");
    }
    fields.push_back(v);
    p = end;
    while (*p == ' ') ++p;
    if (*p == ',') {
      ++p;
    } else if (*p == '\0' || *p == '\r') {
      break;
    } else {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": unexpected character in row");
    }
  }
  if (fields.size() != expected_fields) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(expected_fields) +
                             " fields, got " + std::to_string(fields.size()));
  }
  return fields;
}

std::vector<std::vector<double>> load_csv(const std::filesystem::path& path,
                                          const std::string& expected_header,
                                          std::size_t n_fields) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw std::runtime_error(path.string() + ": header mismatch, expected '" +
                             expected_header + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    rows.push_back(parse_row(line, n_fields, path, line_no));
  }
  return rows;
}

}  // namespace

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path) {
  const auto rows = load_csv(path, "t,fx,fy,fz,wx,wy,wz", 7);
  std::vector<ImuSample> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!out.empty() && !(r[0] > out.back().t)) {
      throw std::runtime_error(path.string() + ": non-monotone timestamp at row " +
                               std::to_string(i + 2));
    }
    ImuSample s;
    s.t = r[0];
    s.specific_force = {r[1], r[2], r[3]};
    s.angular_rate = {r[4], r[5], r[6]};
    out.push_back(s);
  }
  return out;
}

std::vector<GtRow> load_gt_csv(const std::filesystem::path& path) {
  const auto rows =
      load_csv(path, "t,pn,pe,pd,vn,ve,vd,roll,pitch,yaw", 10);
  std::vector<GtRow> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!out.empty() && !(r[0] > out.back().t)) {
      throw std::runtime_error(path.string() + ": non-monotone timestamp at row " +
                               std::to_string(i + 2));
    }
    GtRow g;
    g.t = r[0];
    g.pos = {r[1], r[2], r[3]};
    g.vel = {r[4], r[5], r[6]};
    g.euler = {r[7], r[8], r[9]};
    out.push_back(g);
  }
  return out;
}

DatasetMeta load_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  double lat = NAN, lon = NAN, h = NAN;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const double value = std::strtod(line.c_str() + eq + 1, nullptr);
    if (key == "origin_lat") lat = value;
    if (key == "origin_lon") lon = value;
    if (key == "origin_h") h = value;
  }
  if (!std::isfinite(lat) || !std::isfinite(lon) || !std::isfinite(h)) {
    throw std::runtime_error(path.string() + ": missing origin_lat/lon/h");
  }
  return {GeodeticPosition::make(lat, lon, h)};
}

void write_imu_csv(const std::filesystem::path& path,
                   std::span<const ImuSample> samples) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "t,fx,fy,fz,wx,wy,wz\n";
  for (const auto& s : samples) {
    out << fmt17(s.t) << ',' << fmt17(s.specific_force.x()) << ','
        << fmt17(s.specific_force.y()) << ',' << fmt17(s.specific_force.z())
        << ',' << fmt17(s.angular_rate.x()) << ','
        << fmt17(s.angular_rate.y()) << ',' << fmt17(s.angular_rate.z())
        << '\n';
  }
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

void write_gt_csv(const std::filesystem::path& path,
                  std::span<const GtRow> rows) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "t,pn,pe,pd,vn,ve,vd,roll,pitch,yaw\n";
  for (const auto& g : rows) {
    out << fmt17(g.t) << ',' << fmt17(g.pos.x()) << ',' << fmt17(g.pos.y())
        << ',' << fmt17(g.pos.z()) << ',' << fmt17(g.vel.x()) << ','
        << fmt17(g.vel.y()) << ',' << fmt17(g.vel.z()) << ','
        << fmt17(g.euler.x()) << ',' << fmt17(g.euler.y()) << ','
        << fmt17(g.euler.z()) << '\n';
  }
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

void write_meta(const std::filesystem::path& path, const DatasetMeta& meta) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "origin_lat=" << fmt17(meta.origin.lat) << '\n'
      << "origin_lon=" << fmt17(meta.origin.lon) << '\n'
      << "origin_h=" << fmt17(meta.origin.height) << '\n';
}

AlignmentReport align(std::span<const ImuSample> imu,
                      std::span<const GtRow> gt) {
  if (imu.size() < 2 || gt.empty()) {
    throw std::invalid_argument("align: need >= 2 IMU samples and >= 1 GT row");
  }
  const double t_lo = imu.front().t;
  const double t_hi = imu.back().t;
  if (gt.front().t > t_hi || gt.back().t < t_lo) {
    throw std::invalid_argument("align: IMU and GT time ranges do not overlap");
  }

  std::vector<double> dts;
  dts.reserve(imu.size() - 1);
  for (std::size_t i = 1; i < imu.size(); ++i) {
    dts.push_back(imu[i].t - imu[i - 1].t);
  }
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double half_period = 0.5 * dts[dts.size() / 2];

  AlignmentReport report;
  std::size_t lo = 0;
  for (const auto& g : gt) {
    if (g.t < t_lo || g.t > t_hi) {
      ++report.dropped_out_of_range;
      continue;
    }
    while (lo + 1 < imu.size() && imu[lo + 1].t <= g.t) ++lo;
    // Candidates imu[lo] (<= g.t) and imu[lo+1]; ties go to the earlier.
    std::size_t best = lo;
    if (lo + 1 < imu.size() &&
        std::abs(imu[lo + 1].t - g.t) < std::abs(g.t - imu[lo].t)) {
      best = lo + 1;
    }
    if (std::abs(imu[best].t - g.t) > half_period * (1.0 + 1e-9)) {
      ++report.dropped_gap_exceeded;
      continue;
    }
    report.samples.push_back({g.t, imu[best], g});
  }
  if (report.samples.empty()) {
    throw std::invalid_argument("align: no GT rows inside the IMU range");
  }
  return report;
}

TrajectoryData make_trajectory_data(std::string id,
                                    std::vector<ImuSample> imu,
                                    std::vector<GtRow> gt,
                                    const GeodeticPosition& origin) {
  TrajectoryData data;
  data.id = std::move(id);
  data.imu = std::move(imu);
  auto report = align(data.imu, gt);
  data.aligned = std::move(report.samples);
  data.origin = origin;
  data.t_begin = data.imu.front().t;
  data.t_end = data.imu.back().t;
  return data;
}

void normalize_inputs(TrainingSet& set) {
  if (set.trajectories.empty()) {
    throw std::invalid_argument("normalize_inputs: empty training set");
  }
  Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> sum_sq = Eigen::Matrix<double, 6, 1>::Zero();
  std::size_t n = 0;
  for (const auto& traj : set.trajectories) {
    if (traj.aligned.empty()) {
      throw std::invalid_argument("normalize_inputs: empty trajectory " +
                                  traj.id);
    }
    for (const auto& s : traj.aligned) {
      Eigen::Matrix<double, 6, 1> x;
      x << s.imu.specific_force, s.imu.angular_rate;
      sum += x;
      sum_sq += x.cwiseProduct(x);
      ++n;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  set.stats.mean = sum * inv_n;
  for (int k = 0; k < 6; ++k) {
    const double var = sum_sq[k] * inv_n - set.stats.mean[k] * set.stats.mean[k];
    if (var > 0.0) {
      set.stats.scale[k] = std::sqrt(var);
    } else {
      std::cerr << "normalize_inputs: channel " << k
                << " has zero variance, keeping scale 1\n";
      set.stats.scale[k] = 1.0;
    }
  }
}

FeatureMap::FeatureMap(const InputStats& stats, double t_begin, double t_end)
    : stats_(stats), t_begin_(t_begin) {
  const double span = t_end - t_begin;
  if (!(span > 0.0)) {
    throw std::invalid_argument("FeatureMap: trajectory span must be > 0");
  }
  inv_span_ = 1.0 / span;
}

Eigen::Matrix<double, 7, 1> FeatureMap::map(double t,
                                            const Eigen::Vector3d& f,
                                            const Eigen::Vector3d& w) const {
  Eigen::Matrix<double, 7, 1> u;
  u[0] = (t - t_begin_) * inv_span_;
  Eigen::Matrix<double, 6, 1> x;
  x << f, w;
  u.tail<6>() = (x - stats_.mean).cwiseQuotient(stats_.scale);
  return u;
}

ImuSample interpolate_imu(std::span<const ImuSample> imu, double t) {
  if (imu.empty()) {
    throw std::invalid_argument("interpolate_imu: empty sequence");
  }
  if (t <= imu.front().t) return imu.front();
  if (t >= imu.back().t) return imu.back();
  const auto it = std::lower_bound(
      imu.begin(), imu.end(), t,
      [](const ImuSample& s, double value) { return s.t < value; });
  const auto hi = it;
  const auto lo = it - 1;
  const double alpha = (t - lo->t) / (hi->t - lo->t);
  ImuSample out;
  out.t = t;
  out.specific_force =
      (1.0 - alpha) * lo->specific_force + alpha * hi->specific_force;
  out.angular_rate =
      (1.0 - alpha) * lo->angular_rate + alpha * hi->angular_rate;
  return out;
}

Eigen::Vector3d interpolate_gt_position(std::span<const AlignedSample> gt,
                                        double t) {
  if (gt.empty()) {
    throw std::invalid_argument("interpolate_gt_position: empty sequence");
  }
  if (t <= gt.front().t) return gt.front().gt.pos;
  if (t >= gt.back().t) return gt.back().gt.pos;
  const auto it = std::lower_bound(
      gt.begin(), gt.end(), t,
      [](const AlignedSample& s, double value) { return s.t < value; });
  const auto hi = it;
  const auto lo = it - 1;
  const double alpha = (t - lo->t) / (hi->t - lo->t);
  return (1.0 - alpha) * lo->gt.pos + alpha * hi->gt.pos;
}

}  // namespace pidr
