#include "pidr/metrics.hpp"

#include "pidr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pidr {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Index of the trajectory row nearest in time to t, ties to the earlier.
std::size_t nearest_row(const Trajectory& traj, double t) {
  const auto& rows = traj.rows;
  auto it = std::lower_bound(
      rows.begin(), rows.end(), t,
      [](const Trajectory::Row& r, double value) { return r.t < value; });
  if (it == rows.begin()) return 0;
  if (it == rows.end()) return rows.size() - 1;
  const auto hi = static_cast<std::size_t>(it - rows.begin());
  const auto lo = hi - 1;
  return (std::abs(rows[hi].t - t) < std::abs(t - rows[lo].t)) ? hi : lo;
}

}  // namespace

AteSeries ate(const Trajectory& pred, const Trajectory& gt) {
  if (pred.rows.empty() || gt.rows.empty()) {
    throw std::invalid_argument("ate: empty trajectory");
  }
  if (pred.frame != TrajectoryFrame::local_ned ||
      gt.frame != TrajectoryFrame::local_ned) {
    throw std::invalid_argument("ate: trajectories must be in local NED");
  }
  const double lo = std::max(pred.rows.front().t, gt.rows.front().t);
  const double hi = std::min(pred.rows.back().t, gt.rows.back().t);
  if (!(lo <= hi)) {
    throw std::invalid_argument("ate: no overlapping time range");
  }
  AteSeries out;
  for (const auto& row : gt.rows) {
    if (row.t < lo || row.t > hi) continue;
    const auto& p = pred.rows[nearest_row(pred, row.t)];
    out.t.push_back(row.t);
    out.ate.push_back((p.position - row.position).norm());
  }
  if (out.ate.empty()) {
    throw std::invalid_argument("ate: no GT timestamps inside the overlap");
  }
  return out;
}

double prmse(const std::vector<double>& ate_series) {
  if (ate_series.empty()) {
    throw std::invalid_argument("prmse: empty series");
  }
  double s = 0.0;
  for (double a : ate_series) s += a * a;
  return std::sqrt(s / static_cast<double>(ate_series.size()));
}

double mate(const std::vector<double>& ate_series) {
  if (ate_series.empty()) {
    throw std::invalid_argument("mate: empty series");
  }
  double s = 0.0;
  for (double a : ate_series) s += a;
  return s / static_cast<double>(ate_series.size());
}

double tde(double prmse_m, const Trajectory& gt) {
  const double d = gt.path_length();
  if (!(d > 0.0)) {
    throw std::invalid_argument("tde: GT path length must be > 0");
  }
  return prmse_m / d * 100.0;
}

double fde(const Trajectory& pred, const Trajectory& gt) {
  const AteSeries s = ate(pred, gt);
  return s.ate.back();
}

TrajectoryMetrics evaluate_trajectory(const Trajectory& pred,
                                      const Trajectory& gt) {
  const AteSeries s = ate(pred, gt);
  TrajectoryMetrics m;
  m.prmse = prmse(s.ate);
  m.mate = mate(s.ate);
  m.tde = tde(m.prmse, gt);
  m.fde = s.ate.back();
  return m;
}

ComparisonTable compare(const std::vector<MethodReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("compare: no reports");
  }
  ComparisonTable table;
  for (const auto& [id, unused] : reports.front().per_trajectory) {
    table.trajectory_ids.push_back(id);
  }
  for (const auto& rep : reports) {
    table.method_labels.push_back(rep.label);
    if (rep.per_trajectory.size() != table.trajectory_ids.size()) {
      throw std::invalid_argument(
          "compare: trajectory sets differ between methods");
    }
    for (const auto& id : table.trajectory_ids) {
      if (!rep.per_trajectory.contains(id)) {
        throw std::invalid_argument("compare: method '" + rep.label +
                                    "' is missing trajectory '" + id + "'");
      }
    }
  }

  const std::vector<std::pair<std::string,
                              double TrajectoryMetrics::*>> metrics = {
      {"PRMSE", &TrajectoryMetrics::prmse},
      {"MATE", &TrajectoryMetrics::mate},
      {"TDE", &TrajectoryMetrics::tde},
      {"FDE", &TrajectoryMetrics::fde},
  };

  for (const auto& [name, member] : metrics) {
    for (const auto& rep : reports) {
      std::vector<double>& vals = table.values[name][rep.label];
      double sum = 0.0;
      for (const auto& id : table.trajectory_ids) {
        const double v = rep.per_trajectory.at(id).*member;
        vals.push_back(v);
        sum += v;
      }
      table.averages[name][rep.label] =
          sum / static_cast<double>(table.trajectory_ids.size());
    }
    if (reports.size() > 1) {
      const double ours = table.averages[name][reports.back().label];
      for (std::size_t k = 0; k + 1 < reports.size(); ++k) {
        const double base = table.averages[name][reports[k].label];
        table.improvement[name][reports[k].label] =
            (base - ours) / base * 100.0;
      }
    }
  }
  return table;
}

int render_improvement(double percent) {
  return static_cast<int>(percent);  // truncation toward zero
}

std::string render_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  const bool with_improvement = !table.improvement.empty();
  for (const std::string metric : {"PRMSE", "MATE", "TDE", "FDE"}) {
    out << metric << (metric == "TDE" ? " [%]" : " [m]") << '\n';
    out << "  method";
    for (const auto& id : table.trajectory_ids) out << '\t' << id;
    out << "\taverage";
    if (with_improvement) out << "\timprovement[%]";
    out << '\n';
    for (const auto& label : table.method_labels) {
      out << "  " << label;
      char buf[32];
      for (double v : table.values.at(metric).at(label)) {
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        out << '\t' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.1f",
                    table.averages.at(metric).at(label));
      out << '\t' << buf;
      if (with_improvement) {
        const auto& imp = table.improvement.at(metric);
        if (imp.contains(label)) {
          out << '\t' << render_improvement(imp.at(label));
        } else {
          out << "\t--";
        }
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       const TrajectoryMetrics& m) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "PRMSE,MATE,TDE,FDE\n"
      << fmt17(m.prmse) << ',' << fmt17(m.mate) << ',' << fmt17(m.tde) << ','
      << fmt17(m.fde) << '\n';
}

TrajectoryMetrics load_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string header, line;
  if (!std::getline(in, header) || !std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": truncated metrics CSV");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "PRMSE,MATE,TDE,FDE") {
    throw std::runtime_error(path.string() + ": header mismatch");
  }
  TrajectoryMetrics m;
  if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &m.prmse, &m.mate, &m.tde,
                  &m.fde) != 4) {
    throw std::runtime_error(path.string() + ": malformed metrics row");
  }
  return m;
}

void write_method_report_csv(const std::filesystem::path& path,
                             const MethodReport& report) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "trajectory,PRMSE,MATE,TDE,FDE\n";
  for (const auto& [id, m] : report.per_trajectory) {
    out << id << ',' << fmt17(m.prmse) << ',' << fmt17(m.mate) << ','
        << fmt17(m.tde) << ',' << fmt17(m.fde) << '\n';
  }
}

MethodReport load_method_report_csv(const std::filesystem::path& path,
                                    const std::string& label) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  MethodReport report;
  report.label = label;
  if (line == "PRMSE,MATE,TDE,FDE") {
    // Single-trajectory report (cmd_eval / cmd_dr output); the file stem
    // names the trajectory.
    if (!std::getline(in, line)) {
      throw std::runtime_error(path.string() + ": truncated metrics CSV");
    }
    TrajectoryMetrics m;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &m.prmse, &m.mate,
                    &m.tde, &m.fde) != 4) {
      throw std::runtime_error(path.string() + ": malformed metrics row");
    }
    report.per_trajectory[path.stem().string()] = m;
    return report;
  }
  if (line != "trajectory,PRMSE,MATE,TDE,FDE") {
    throw std::runtime_error(path.string() + ": header mismatch");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed row");
    }
    TrajectoryMetrics m;
    if (std::sscanf(line.c_str() + comma + 1, "%lf,%lf,%lf,%lf", &m.prmse,
                    &m.mate, &m.tde, &m.fde) != 4) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed row");
    }
    report.per_trajectory[line.substr(0, comma)] = m;
  }
  return report;
}

void write_ate_csv(const std::filesystem::path& path, const AteSeries& s) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "t,ate\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out << fmt17(s.t[i]) << ',' << fmt17(s.ate[i]) << '\n';
  }
}

void write_track_csv(const std::filesystem::path& path,
                     const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "t,pn,pe,pd\n";
  for (const auto& row : traj.rows) {
    out << fmt17(row.t) << ',' << fmt17(row.position.x()) << ','
        << fmt17(row.position.y()) << ',' << fmt17(row.position.z()) << '\n';
  }
}

void write_tracks_svg(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const Trajectory*>>& tracks) {
  double n_min = 1e300, n_max = -1e300, e_min = 1e300, e_max = -1e300;
  for (const auto& [label, traj] : tracks) {
    for (const auto& row : traj->rows) {
      n_min = std::min(n_min, row.position.x());
      n_max = std::max(n_max, row.position.x());
      e_min = std::min(e_min, row.position.y());
      e_max = std::max(e_max, row.position.y());
    }
  }
  const double pad = 0.05 * std::max(n_max - n_min, e_max - e_min) + 1e-9;
  n_min -= pad;
  n_max += pad;
  e_min -= pad;
  e_max += pad;

  const double w = 640.0, h = 640.0;
  const double sx = w / (e_max - e_min);
  const double sy = h / (n_max - n_min);
  const double s = std::min(sx, sy);
  // East on the x axis, north up.
  const auto px = [&](double e) { return (e - e_min) * s; };
  const auto py = [&](double n) { return h - (n - n_min) * s; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 180
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w + 180 << ' ' << h
      << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  std::size_t ci = 0;
  for (const auto& [label, traj] : tracks) {
    const char* color = kColors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& row : traj->rows) {
      out << px(row.position.y()) << ',' << py(row.position.x()) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << w + 10 << "\" y=\"" << 20 + 18 * ci
        << "\" fill=\"" << color << "\" font-size=\"13\">" << label
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace pidr
