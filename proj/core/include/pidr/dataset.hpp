#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pidr/frames.hpp"
#include "pidr/mechanization.hpp"

namespace pidr {

/// One ground-truth row: local-NED position [m], velocity [m/s] and Euler
/// angles [rad] at time t.
struct GtRow {
  double t = 0.0;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();
  Eigen::Vector3d euler = Eigen::Vector3d::Zero();
};

/// Sidecar metadata: the chart origin the GT positions are relative to.
struct DatasetMeta {
  GeodeticPosition origin;
};

// CSV schemas (exact headers):
//   imu.csv: t,fx,fy,fz,wx,wy,wz           (s, m/s^2, rad/s)
//   gt.csv:  t,pn,pe,pd,vn,ve,vd,roll,pitch,yaw  (s, m, m/s, rad)
// Floating-point fields are written with 17 significant digits.

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path);
std::vector<GtRow> load_gt_csv(const std::filesystem::path& path);
DatasetMeta load_meta(const std::filesystem::path& path);

void write_imu_csv(const std::filesystem::path& path,
                   std::span<const ImuSample> samples);
void write_gt_csv(const std::filesystem::path& path,
                  std::span<const GtRow> rows);
void write_meta(const std::filesystem::path& path, const DatasetMeta& meta);

/// A GT row paired with its nearest-in-time IMU sample.
struct AlignedSample {
  double t = 0.0;       // GT timestamp
  ImuSample imu;        // nearest IMU sample (ties resolved to the earlier)
  GtRow gt;
};

struct AlignmentReport {
  std::vector<AlignedSample> samples;
  std::size_t dropped_out_of_range = 0;
  std::size_t dropped_gap_exceeded = 0;
};

/// Pairs each GT row whose timestamp lies inside the IMU time range with
/// the nearest IMU sample. Pairs whose time gap exceeds half the median IMU
/// period are dropped and counted. Throws std::invalid_argument when the
/// time ranges do not overlap.
AlignmentReport align(std::span<const ImuSample> imu,
                      std::span<const GtRow> gt);

/// One recorded trajectory ready for training.
struct TrajectoryData {
  std::string id;
  std::vector<ImuSample> imu;
  std::vector<AlignedSample> aligned;
  GeodeticPosition origin;
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// Per-channel affine normalization of the six IMU input channels; the time
/// channel is mapped to [0, 1] per trajectory.
struct InputStats {
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> scale = Eigen::Matrix<double, 6, 1>::Ones();
};

struct TrainingSet {
  std::vector<TrajectoryData> trajectories;
  InputStats stats;
};

TrajectoryData make_trajectory_data(std::string id,
                                    std::vector<ImuSample> imu,
                                    std::vector<GtRow> gt,
                                    const GeodeticPosition& origin);

/// Computes normalization stats over the set's aligned IMU samples.
/// Zero-variance channels keep scale 1 (a warning is printed). Stats are a
/// pure function of the training trajectories; applying them elsewhere is
/// an affine map with no re-fit.
void normalize_inputs(TrainingSet& set);

/// Maps raw (t, f, w) to the 7-channel normalized network input of one
/// trajectory, and exposes the time-chain factor d(t_norm)/dt = 1/T.
class FeatureMap {
 public:
  FeatureMap(const InputStats& stats, double t_begin, double t_end);

  Eigen::Matrix<double, 7, 1> map(double t, const Eigen::Vector3d& f,
                                  const Eigen::Vector3d& w) const;
  double time_scale() const { return inv_span_; }

 private:
  InputStats stats_;
  double t_begin_;
  double inv_span_;
};

/// Linear per-channel IMU interpolation at time t (clamped to the ends).
ImuSample interpolate_imu(std::span<const ImuSample> imu, double t);

/// Linear GT position interpolation at time t (clamped), used to evaluate
/// the residual reference latitude/height at collocation times.
Eigen::Vector3d interpolate_gt_position(std::span<const AlignedSample> gt,
                                        double t);

}  // namespace pidr
