#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pidr/metrics.hpp"
#include "pidr/rng.hpp"
#include "pidr/synth.hpp"

using namespace pidr;

namespace {
constexpr double kPi = std::numbers::pi;

Trajectory line_track(double duration, double rate,
                      const Eigen::Vector3d& offset = Eigen::Vector3d::Zero(),
                      double drift_rate = 0.0) {
  Trajectory t;
  t.frame = TrajectoryFrame::local_ned;
  const auto n = static_cast<std::size_t>(duration * rate);
  for (std::size_t i = 0; i <= n; ++i) {
    Trajectory::Row row;
    row.t = static_cast<double>(i) / rate;
    row.position = Eigen::Vector3d(row.t, 0.0, 0.0) + offset +
                   Eigen::Vector3d(0.0, drift_rate * row.t, 0.0);
    t.rows.push_back(row);
  }
  return t;
}

MethodReport report_from(const std::string& label,
                         const std::map<std::string, double>& prmse_values) {
  MethodReport r;
  r.label = label;
  for (const auto& [id, v] : prmse_values) {
    TrajectoryMetrics m;
    m.prmse = v;
    m.mate = v;
    m.tde = v;
    m.fde = v;
    r.per_trajectory[id] = m;
  }
  return r;
}
}  // namespace

TEST_CASE("ate: identical trajectories give zeros") {
  const Trajectory t = line_track(10.0, 5.0);
  const AteSeries s = ate(t, t);
  for (double a : s.ate) CHECK(a == 0.0);
}

TEST_CASE("ate: constant 3-4-0 offset gives constant 5") {
  const Trajectory gt = line_track(10.0, 5.0);
  const Trajectory pred = line_track(10.0, 5.0, {3.0, 4.0, 0.0});
  const AteSeries s = ate(pred, gt);
  for (double a : s.ate) CHECK(a == doctest::Approx(5.0));
}

TEST_CASE("ate: linear drift grows linearly") {
  const Trajectory gt = line_track(10.0, 5.0);
  const Trajectory pred = line_track(10.0, 5.0, {0, 0, 0}, 0.25);
  const AteSeries s = ate(pred, gt);
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    CHECK(s.ate[i] == doctest::Approx(0.25 * s.t[i]).epsilon(1e-12));
  }
}

TEST_CASE("ate input validation") {
  const Trajectory t = line_track(10.0, 5.0);
  Trajectory geo = t;
  geo.frame = TrajectoryFrame::geodetic;
  CHECK_THROWS_AS(ate(geo, t), std::invalid_argument);
  Trajectory late = line_track(10.0, 5.0);
  for (auto& row : late.rows) row.t += 100.0;
  CHECK_THROWS_AS(ate(late, t), std::invalid_argument);
}

TEST_CASE("prmse and mate basics") {
  CHECK(prmse({5, 5, 5}) == doctest::Approx(5.0));
  CHECK(prmse({0, 2}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(mate({5, 5, 5}) == doctest::Approx(5.0));
  CHECK(mate({0, 2}) == doctest::Approx(1.0));
  CHECK(mate({2, 0}) == mate({0, 2}));
  CHECK_THROWS_AS(prmse({}), std::invalid_argument);
  CHECK_THROWS_AS(mate({}), std::invalid_argument);
}

TEST_CASE("prmse >= mate for random series, equality iff constant") {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s;
    for (int i = 0; i < 20; ++i) s.push_back(rng.next_uniform(0, 10));
    CHECK(prmse(s) >= mate(s) - 1e-12);
  }
  CHECK(prmse({3, 3, 3}) == doctest::Approx(mate({3, 3, 3})));
}

TEST_CASE("tde basics and proportionality") {
  const Trajectory gt = line_track(100.0, 5.0);  // 100 m path
  CHECK(tde(5.0, gt) == doctest::Approx(5.0));
  const Trajectory gt2 = line_track(200.0, 5.0);  // doubled path
  CHECK(tde(5.0, gt2) == doctest::Approx(2.5));
  Trajectory degenerate;
  degenerate.frame = TrajectoryFrame::local_ned;
  degenerate.rows.resize(2);
  CHECK_THROWS_AS(tde(5.0, degenerate), std::invalid_argument);
}

TEST_CASE("gt circle path length approximates the circumference") {
  MotionProfile p;
  p.kind = ProfileKind::circle;
  p.radius = 5.0;
  p.speed = 1.0;
  p.duration = 10.0 * kPi;  // exactly one lap at 1 m/s, R = 5
  p.imu_rate = 100.0;
  p.gt_rate = 50.0;
  const PathModel path(p);
  const Trajectory gt = path.ground_truth(EarthModel::wgs84());
  CHECK(gt.path_length() ==
        doctest::Approx(2.0 * kPi * 5.0).epsilon(1e-3));
}

TEST_CASE("fde: endpoint error and bound by max ATE") {
  const Trajectory gt = line_track(10.0, 5.0);
  const Trajectory pred = line_track(10.0, 5.0, {0, 0, 0}, 0.25);
  CHECK(fde(pred, gt) == doctest::Approx(0.25 * 10.0).epsilon(1e-12));
  CHECK(fde(gt, gt) == 0.0);
  const AteSeries s = ate(pred, gt);
  CHECK(fde(pred, gt) <=
        *std::max_element(s.ate.begin(), s.ate.end()) + 1e-12);
}

TEST_CASE("compare reproduces the published mobile-robot PRMSE table") {
  // Published per-trajectory PRMSE values for the four test trajectories.
  const std::vector<MethodReport> reports = {
      report_from("2D INS", {{"R2", 6.7}, {"R3", 7.8}, {"R5", 8.3}, {"R6", 9.6}}),
      report_from("MoRPI", {{"R2", 16.2}, {"R3", 16.2}, {"R5", 23.5}, {"R6", 23.1}}),
      report_from("MoRPI-PINN", {{"R2", 5.0}, {"R3", 4.6}, {"R5", 1.3}, {"R6", 0.9}}),
      report_from("PiDR", {{"R2", 4.0}, {"R3", 3.7}, {"R5", 0.3}, {"R6", 0.3}}),
  };
  const ComparisonTable table = compare(reports);
  CHECK(table.averages.at("PRMSE").at("2D INS") == doctest::Approx(8.1));
  CHECK(table.averages.at("PRMSE").at("PiDR") ==
        doctest::Approx(2.1).epsilon(0.02));
  CHECK(render_improvement(table.improvement.at("PRMSE").at("2D INS")) == 74);
  CHECK(render_improvement(table.improvement.at("PRMSE").at("MoRPI")) == 89);
  CHECK(render_improvement(table.improvement.at("PRMSE").at("MoRPI-PINN")) ==
        29);
}

TEST_CASE("compare reproduces the published AUV improvement percentages") {
  const std::vector<MethodReport> reports = {
      report_from("3D INS", {{"T10", 545.3}, {"T11", 529.9}, {"T13", 511.6}}),
      report_from("MoRPI", {{"T10", 203.0}, {"T11", 525.5}, {"T13", 360.5}}),
      report_from("MoRPI-PINN",
                  {{"T10", 206.9}, {"T11", 249.7}, {"T13", 312.5}}),
      report_from("PiDR", {{"T10", 17.1}, {"T11", 15.6}, {"T13", 10.8}}),
  };
  const ComparisonTable table = compare(reports);
  CHECK(table.averages.at("PRMSE").at("MoRPI") == doctest::Approx(363.0));
  CHECK(table.averages.at("PRMSE").at("PiDR") == doctest::Approx(14.5));
  CHECK(render_improvement(table.improvement.at("PRMSE").at("3D INS")) == 97);
  CHECK(render_improvement(table.improvement.at("PRMSE").at("MoRPI")) == 96);
  CHECK(render_improvement(table.improvement.at("PRMSE").at("MoRPI-PINN")) ==
        94);
}

TEST_CASE("compare: equal methods give zero improvement") {
  const auto r = report_from("a", {{"t", 5.0}});
  auto r2 = r;
  r2.label = "b";
  const ComparisonTable table = compare({r, r2});
  CHECK(table.improvement.at("PRMSE").at("a") == doctest::Approx(0.0));
}

TEST_CASE("compare rejects mismatched trajectory sets") {
  const auto a = report_from("a", {{"t1", 1.0}, {"t2", 2.0}});
  const auto b = report_from("b", {{"t1", 1.0}, {"t3", 2.0}});
  CHECK_THROWS_AS(compare({a, b}), std::invalid_argument);
}

TEST_CASE("single method: no improvement columns, label order preserved") {
  const auto a = report_from("only", {{"t1", 1.0}});
  const ComparisonTable table = compare({a});
  CHECK(table.improvement.empty());
  const std::string text = render_comparison(table);
  CHECK(text.find("improvement") == std::string::npos);

  const auto multi = compare({report_from("x", {{"t", 2.0}}),
                              report_from("y", {{"t", 1.0}})});
  CHECK(multi.method_labels == std::vector<std::string>{"x", "y"});
}

TEST_CASE("metrics are invariant under rigid translation of both tracks") {
  const Trajectory gt = line_track(10.0, 5.0);
  const Trajectory pred = line_track(10.0, 5.0, {1.0, -2.0, 0.5});
  const TrajectoryMetrics m1 = evaluate_trajectory(pred, gt);

  const Eigen::Vector3d shift(100.0, -50.0, 10.0);
  Trajectory gt2 = gt, pred2 = pred;
  for (auto& row : gt2.rows) row.position += shift;
  for (auto& row : pred2.rows) row.position += shift;
  const TrajectoryMetrics m2 = evaluate_trajectory(pred2, gt2);
  CHECK(m1.prmse == doctest::Approx(m2.prmse).epsilon(1e-9));
  CHECK(m1.mate == doctest::Approx(m2.mate).epsilon(1e-9));
  CHECK(m1.tde == doctest::Approx(m2.tde).epsilon(1e-9));
  CHECK(m1.fde == doctest::Approx(m2.fde).epsilon(1e-9));
}

TEST_CASE("ate is invariant under a common time shift") {
  const Trajectory gt = line_track(10.0, 5.0);
  const Trajectory pred = line_track(10.0, 5.0, {0, 1, 0});
  const AteSeries s1 = ate(pred, gt);
  Trajectory gt2 = gt, pred2 = pred;
  for (auto& row : gt2.rows) row.t += 1000.0;
  for (auto& row : pred2.rows) row.t += 1000.0;
  const AteSeries s2 = ate(pred2, gt2);
  REQUIRE(s1.ate.size() == s2.ate.size());
  for (std::size_t i = 0; i < s1.ate.size(); ++i) {
    CHECK(s1.ate[i] == doctest::Approx(s2.ate[i]));
  }
}

TEST_CASE("metrics csv round trip") {
  TrajectoryMetrics m{1.25, 0.75, 12.5, 3.0};
  const auto path =
      std::filesystem::temp_directory_path() / "pidr_metrics_test.csv";
  write_metrics_csv(path, m);
  const TrajectoryMetrics back = load_metrics_csv(path);
  CHECK(back.prmse == m.prmse);
  CHECK(back.mate == m.mate);
  CHECK(back.tde == m.tde);
  CHECK(back.fde == m.fde);
  std::filesystem::remove(path);
}

TEST_CASE("method report csv round trip") {
  MethodReport r = report_from("pidr", {{"t1", 1.5}, {"t2", 2.5}});
  const auto path =
      std::filesystem::temp_directory_path() / "pidr_report_test.csv";
  write_method_report_csv(path, r);
  const MethodReport back = load_method_report_csv(path, "pidr");
  CHECK(back.per_trajectory.size() == 2);
  CHECK(back.per_trajectory.at("t1").prmse == 1.5);
  CHECK(back.per_trajectory.at("t2").fde == 2.5);
  std::filesystem::remove(path);
}

TEST_CASE("svg track plot is written and self-contained") {
  const Trajectory gt = line_track(10.0, 5.0);
  const auto path =
      std::filesystem::temp_directory_path() / "pidr_tracks_test.svg";
  write_tracks_svg(path, {{"gt", &gt}});
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(content.find("polyline") != std::string::npos);
  CHECK(content.find("gt") != std::string::npos);
  std::filesystem::remove(path);
}
