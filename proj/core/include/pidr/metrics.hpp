#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pidr/mechanization.hpp"

namespace pidr {

/// Per-timestamp horizontal+vertical position error norm, evaluated at the
/// GT timestamps (prediction resampled by nearest neighbor, ties to the
/// earlier sample). Both trajectories must share the local-NED frame.
struct AteSeries {
  std::vector<double> t;
  std::vector<double> ate;
};

AteSeries ate(const Trajectory& pred, const Trajectory& gt);

double prmse(const std::vector<double>& ate_series);
double mate(const std::vector<double>& ate_series);

/// PRMSE normalized by the GT path length, in percent.
double tde(double prmse_m, const Trajectory& gt);

/// Endpoint error at the last common GT timestamp.
double fde(const Trajectory& pred, const Trajectory& gt);

struct TrajectoryMetrics {
  double prmse = 0.0;
  double mate = 0.0;
  double tde = 0.0;
  double fde = 0.0;
};

TrajectoryMetrics evaluate_trajectory(const Trajectory& pred,
                                      const Trajectory& gt);

/// One method's metrics over a set of trajectories.
struct MethodReport {
  std::string label;
  std::map<std::string, TrajectoryMetrics> per_trajectory;
};

/// Comparison table: per-metric per-method rows over the shared trajectory
/// ids, their averages, and the improvement of the last method over each
/// baseline, (baseline - ours) / baseline * 100. Rendered integers are
/// truncated toward zero.
struct ComparisonTable {
  std::vector<std::string> trajectory_ids;
  std::vector<std::string> method_labels;  // input order, last = "ours"
  // metric -> method -> per-trajectory values (ordered as trajectory_ids)
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  std::map<std::string, std::map<std::string, double>> averages;
  std::map<std::string, std::map<std::string, double>> improvement;  // raw %
};

ComparisonTable compare(const std::vector<MethodReport>& reports);

/// Integer rendering of an improvement percentage (truncation toward zero,
/// matching the published tables).
int render_improvement(double percent);

std::string render_comparison(const ComparisonTable& table);

// Report files.
void write_metrics_csv(const std::filesystem::path& path,
                       const TrajectoryMetrics& m);
TrajectoryMetrics load_metrics_csv(const std::filesystem::path& path);

void write_method_report_csv(const std::filesystem::path& path,
                             const MethodReport& report);
MethodReport load_method_report_csv(const std::filesystem::path& path,
                                    const std::string& label);

void write_ate_csv(const std::filesystem::path& path, const AteSeries& s);
void write_track_csv(const std::filesystem::path& path,
                     const Trajectory& traj);

/// Self-contained SVG of the N-E tracks (one polyline per trajectory).
void write_tracks_svg(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string,
                                                  const Trajectory*>>& tracks);

}  // namespace pidr
