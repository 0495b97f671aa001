// pidr: batch pipeline for physics-informed inertial dead reckoning.
//
// Subcommands: synth (generate a dataset), dr (inertial baseline),
// train (PiDR training), eval (checkpoint evaluation), compare (method
// comparison tables).
//
// Exit codes: 0 ok, 2 config/validation error, 3 I/O error, 4 numerical
// failure during training.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pidr/dataset.hpp"
#include "pidr/errors.hpp"
#include "pidr/frames.hpp"
#include "pidr/loss.hpp"
#include "pidr/mechanization.hpp"
#include "pidr/metrics.hpp"
#include "pidr/network.hpp"
#include "pidr/synth.hpp"
#include "pidr/trainer.hpp"

namespace fs = std::filesystem;
using namespace pidr;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::map<std::string, std::string> read_kv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() +
                                  ": expected key=value, got '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double kv_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || !std::isfinite(v)) {
    throw std::invalid_argument("field '" + key + "': bad numeric value '" +
                                it->second + "'");
  }
  return v;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::string& config_path, std::uint64_t seed) {
  std::ofstream out(out_dir / "manifest.txt");
  if (!out) {
    throw IoError("cannot write " + (out_dir / "manifest.txt").string());
  }
  out << "command=" << command << '\n';
  out << "config=" << config_path << '\n';
  for (const auto& in : inputs) out << "input=" << in << '\n';
  out << "out_dir=" << out_dir.string() << '\n';
  out << "seed=" << seed << '\n';
  out << "version=" << kVersion << '\n';
}

MotionProfile parse_profile(const fs::path& path) {
  const auto kv = read_kv_file(path);
  MotionProfile p;
  const auto kind_it = kv.find("kind");
  if (kind_it == kv.end()) {
    throw std::invalid_argument("field 'kind': missing (circle, rectangle, "
                                "lawnmower or straight_dive)");
  }
  if (kind_it->second == "circle") {
    p.kind = ProfileKind::circle;
  } else if (kind_it->second == "rectangle") {
    p.kind = ProfileKind::rectangle;
  } else if (kind_it->second == "lawnmower") {
    p.kind = ProfileKind::lawnmower;
  } else if (kind_it->second == "straight_dive") {
    p.kind = ProfileKind::straight_dive;
  } else {
    throw std::invalid_argument("field 'kind': unknown profile kind '" +
                                kind_it->second + "'");
  }
  p.radius = kv_double(kv, "radius", p.radius);
  p.leg_north = kv_double(kv, "leg_north", p.leg_north);
  p.leg_east = kv_double(kv, "leg_east", p.leg_east);
  p.leg_length = kv_double(kv, "leg_length", p.leg_length);
  p.spacing = kv_double(kv, "spacing", p.spacing);
  p.dive_rate = kv_double(kv, "dive_rate", p.dive_rate);
  p.corner_time = kv_double(kv, "corner_time", p.corner_time);
  p.speed = kv_double(kv, "speed", p.speed);
  p.duration = kv_double(kv, "duration", p.duration);
  p.imu_rate = kv_double(kv, "imu_rate", p.imu_rate);
  p.gt_rate = kv_double(kv, "gt_rate", p.gt_rate);
  const double deg = std::numbers::pi / 180.0;
  p.origin = GeodeticPosition::make(
      kv_double(kv, "origin_lat_deg", p.origin.lat / deg) * deg,
      kv_double(kv, "origin_lon_deg", p.origin.lon / deg) * deg,
      kv_double(kv, "origin_h", p.origin.height));
  p.validate();
  return p;
}

SensorErrorModel parse_errors(const fs::path& path) {
  const auto kv = read_kv_file(path);
  SensorErrorModel m;
  if (kv.contains("preset") && kv.at("preset") == "xsens_dot") {
    m = SensorErrorModel::xsens_dot(0);
  }
  m.accel_bias.x() = kv_double(kv, "accel_bias_x", m.accel_bias.x());
  m.accel_bias.y() = kv_double(kv, "accel_bias_y", m.accel_bias.y());
  m.accel_bias.z() = kv_double(kv, "accel_bias_z", m.accel_bias.z());
  m.gyro_bias.x() = kv_double(kv, "gyro_bias_x", m.gyro_bias.x());
  m.gyro_bias.y() = kv_double(kv, "gyro_bias_y", m.gyro_bias.y());
  m.gyro_bias.z() = kv_double(kv, "gyro_bias_z", m.gyro_bias.z());
  m.accel_noise_density =
      kv_double(kv, "accel_noise_density", m.accel_noise_density);
  m.gyro_noise_density =
      kv_double(kv, "gyro_noise_density", m.gyro_noise_density);
  m.seed = static_cast<std::uint64_t>(kv_double(kv, "seed", 0.0));
  m.validate();
  return m;
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw IoError("missing file: " + path.string());
  }
}

struct LoadedDataset {
  std::string id;
  std::vector<ImuSample> imu;
  std::vector<GtRow> gt;
  DatasetMeta meta;
};

LoadedDataset load_dataset_dir(const fs::path& dir) {
  require_file(dir / "imu.csv");
  require_file(dir / "gt.csv");
  require_file(dir / "meta.txt");
  LoadedDataset d;
  d.id = dir.filename().string().empty() ? dir.parent_path().filename().string()
                                         : dir.filename().string();
  d.imu = load_imu_csv(dir / "imu.csv");
  d.gt = load_gt_csv(dir / "gt.csv");
  d.meta = load_meta(dir / "meta.txt");
  return d;
}

Trajectory gt_track(const LoadedDataset& d) {
  Trajectory t;
  t.frame = TrajectoryFrame::local_ned;
  t.origin = d.meta.origin;
  for (const auto& g : d.gt) {
    t.rows.push_back({g.t, g.pos, g.vel, g.euler});
  }
  return t;
}

void write_eval_outputs(const fs::path& out_dir, const Trajectory& pred,
                        const Trajectory& gt) {
  const TrajectoryMetrics m = evaluate_trajectory(pred, gt);
  write_metrics_csv(out_dir / "metrics.csv", m);
  write_ate_csv(out_dir / "ate.csv", ate(pred, gt));
  write_track_csv(out_dir / "track_pred.csv", pred);
  write_track_csv(out_dir / "track_gt.csv", gt);
  write_tracks_svg(out_dir / "tracks.svg", {{"gt", &gt}, {"pred", &pred}});
}

int cmd_synth(const fs::path& profile_cfg, const fs::path& error_cfg,
              const fs::path& out_dir) {
  require_file(profile_cfg);
  require_file(error_cfg);
  const MotionProfile profile = parse_profile(profile_cfg);
  const SensorErrorModel errors = parse_errors(error_cfg);
  const PathModel path(profile);
  fs::create_directories(out_dir);
  emit_dataset(path, errors, out_dir, EarthModel::wgs84());
  write_manifest(out_dir, "synth",
                 {profile_cfg.string(), error_cfg.string()},
                 profile_cfg.string(), errors.seed);
  std::cout << "synth: wrote " << (out_dir / "imu.csv").string() << ", gt.csv, meta.txt\n";
  return 0;
}

int cmd_dr(const fs::path& dataset_dir, const std::string& scheme,
           bool mode_2d, const fs::path& out_dir) {
  const LoadedDataset d = load_dataset_dir(dataset_dir);
  const EarthModel model = EarthModel::wgs84();

  DeadReckonOptions opts;
  opts.mode_2d = mode_2d;
  if (scheme == "euler") {
    opts.scheme = IntegrationScheme::euler;
  } else if (scheme == "rk4") {
    opts.scheme = IntegrationScheme::rk4;
  } else {
    throw std::invalid_argument("field 'scheme': must be euler or rk4");
  }

  // Initial state from the first GT sample.
  if (d.gt.empty()) {
    throw std::invalid_argument("gt.csv: no rows");
  }
  NavState init;
  init.position = ned_to_geodetic_point(d.gt.front().pos, d.meta.origin, model);
  init.velocity = d.gt.front().vel;
  init.attitude = dcm_from_euler({d.gt.front().euler.x(),
                                  d.gt.front().euler.y(),
                                  d.gt.front().euler.z()});

  const Trajectory traj = dead_reckon(init, d.imu, opts, model);
  const Trajectory pred = geodetic_to_local_ned(traj, d.meta.origin, model);

  fs::create_directories(out_dir);
  write_eval_outputs(out_dir, pred, gt_track(d));
  write_manifest(out_dir, "dr", {dataset_dir.string()}, "", 0);
  std::cout << "dr: wrote " << (out_dir / "metrics.csv").string() << '\n';
  return 0;
}

struct TrainCliOverrides {
  std::optional<double> learning_rate, lambda_phys, lambda_data;
  std::optional<std::size_t> batch_size, n_collocation, max_epochs,
      checkpoint_every;
  std::optional<std::uint64_t> seed;
  bool mode_2d = false;
};

int cmd_train(const fs::path& config_path,
              const std::vector<fs::path>& dataset_dirs,
              const fs::path& out_dir, const TrainCliOverrides& over,
              const fs::path& resume_path) {
  TrainConfig config;
  if (!config_path.empty()) {
    require_file(config_path);
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    config = TrainConfig::deserialize(ss.str());
  }
  if (over.learning_rate) config.learning_rate = *over.learning_rate;
  if (over.lambda_phys) config.weights.lambda_phys = *over.lambda_phys;
  if (over.lambda_data) config.weights.lambda_data = *over.lambda_data;
  if (over.batch_size) config.batch_size = *over.batch_size;
  if (over.n_collocation) config.n_collocation = *over.n_collocation;
  if (over.max_epochs) config.max_epochs = *over.max_epochs;
  if (over.checkpoint_every) config.checkpoint_every = *over.checkpoint_every;
  if (over.seed) config.seed = *over.seed;
  if (over.mode_2d) config.mode_2d = true;
  config.validate();

  const EarthModel model = EarthModel::wgs84();
  TrainingSet set;
  std::vector<std::string> inputs;
  for (const auto& dir : dataset_dirs) {
    LoadedDataset d = load_dataset_dir(dir);
    set.trajectories.push_back(make_trajectory_data(
        d.id, std::move(d.imu), std::move(d.gt), d.meta.origin));
    inputs.push_back(dir.string());
  }

  std::optional<TrainerSnapshot> resume;
  if (!resume_path.empty()) {
    require_file(resume_path);
    resume = load_train_checkpoint(resume_path);
  }

  fs::create_directories(out_dir);
  const CheckpointSink sink = [&](std::size_t, const TrainerSnapshot& snap) {
    save_train_checkpoint(out_dir / "checkpoint.json", snap, config.seed);
  };

  const TrainResult result = train(config, set, model, resume, sink);

  save_train_checkpoint(out_dir / "checkpoint.json", result.snapshot,
                        config.seed);
  {
    std::ofstream log(out_dir / "train_log.csv");
    if (!log) {
      throw IoError("cannot write " + (out_dir / "train_log.csv").string());
    }
    log << "epoch,total,data,phys,lr\n";
    char buf[160];
    for (const auto& rec : result.report.history) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n",
                    rec.epoch, rec.total, rec.data, rec.phys, rec.lr);
      log << buf;
    }
  }
  {
    std::ofstream cfg(out_dir / "train_config.txt");
    cfg << config.serialize();
  }
  {
    std::ofstream report(out_dir / "train_report.txt");
    report << "epochs_run=" << result.report.history.size() << '\n';
    report << "stop_reason="
           << (result.report.stop_reason == StopReason::converged
                   ? "converged"
                   : result.report.stop_reason == StopReason::max_epochs
                         ? "max_epochs"
                         : "nan_abort")
           << '\n';
    report << "physics_evaluations=" << result.report.physics_evaluations
           << '\n';
  }
  {
    // Wall time lives in its own file so every other artifact is
    // byte-reproducible under a fixed seed.
    std::ofstream timing(out_dir / "timing.txt");
    timing << "wall_time_s=" << result.report.wall_time_s << '\n';
  }
  write_manifest(out_dir, "train", inputs, config_path.string(), config.seed);

  if (result.report.stop_reason == StopReason::nan_abort) {
    std::cerr << "train: aborted on non-finite loss; last good checkpoint "
                 "retained at "
              << (out_dir / "checkpoint.json").string() << '\n';
    return kExitNumerical;
  }
  std::cout << "train: " << result.report.history.size() << " epochs, wrote "
            << (out_dir / "checkpoint.json").string() << '\n';
  return 0;
}

int cmd_eval(const fs::path& checkpoint_path, const fs::path& dataset_dir,
             const fs::path& out_dir) {
  require_file(checkpoint_path);
  const NetCheckpoint ckpt =
      load_checkpoint(checkpoint_path, NetworkParams::pidr_dims());
  const LoadedDataset d = load_dataset_dir(dataset_dir);
  if (d.imu.size() < 2) {
    throw std::invalid_argument("imu.csv: need at least two samples");
  }

  const FeatureMap map(ckpt.stats, d.imu.front().t, d.imu.back().t);
  Eigen::MatrixXd input(7, static_cast<Eigen::Index>(d.imu.size()));
  for (std::size_t i = 0; i < d.imu.size(); ++i) {
    input.col(static_cast<Eigen::Index>(i)) =
        map.map(d.imu[i].t, d.imu[i].specific_force, d.imu[i].angular_rate);
  }
  const Eigen::MatrixXd out = forward(ckpt.params, input, NetMode::eval);

  Trajectory pred;
  pred.frame = TrajectoryFrame::local_ned;
  pred.origin = d.meta.origin;
  for (std::size_t i = 0; i < d.imu.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    pred.rows.push_back({d.imu[i].t, out.col(c).head<3>(),
                         out.col(c).segment<3>(3), out.col(c).tail<3>()});
  }

  fs::create_directories(out_dir);
  write_eval_outputs(out_dir, pred, gt_track(d));
  write_manifest(out_dir, "eval",
                 {checkpoint_path.string(), dataset_dir.string()}, "",
                 ckpt.seed);
  std::cout << "eval: wrote " << (out_dir / "metrics.csv").string() << '\n';
  return 0;
}

int cmd_compare(const std::vector<fs::path>& report_paths,
                const std::vector<std::string>& labels,
                const fs::path& out_dir) {
  if (labels.size() != report_paths.size()) {
    throw std::invalid_argument("--labels must match the number of reports");
  }
  std::vector<MethodReport> reports;
  for (std::size_t i = 0; i < report_paths.size(); ++i) {
    require_file(report_paths[i]);
    reports.push_back(load_method_report_csv(report_paths[i], labels[i]));
  }
  const ComparisonTable table = compare(reports);

  fs::create_directories(out_dir);
  const std::string text = render_comparison(table);
  {
    std::ofstream out(out_dir / "comparison.txt");
    out << text;
  }
  {
    std::ofstream out(out_dir / "comparison.csv");
    out << "metric,method";
    for (const auto& id : table.trajectory_ids) out << ',' << id;
    out << ",average,improvement_pct\n";
    for (const std::string metric : {"PRMSE", "MATE", "TDE", "FDE"}) {
      for (const auto& label : table.method_labels) {
        out << metric << ',' << label;
        char buf[32];
        for (double v : table.values.at(metric).at(label)) {
          std::snprintf(buf, sizeof(buf), "%.17g", v);
          out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g",
                      table.averages.at(metric).at(label));
        out << ',' << buf;
        if (table.improvement.contains(metric) &&
            table.improvement.at(metric).contains(label)) {
          out << ','
              << render_improvement(table.improvement.at(metric).at(label));
        } else {
          out << ",--";
        }
        out << '\n';
      }
    }
  }
  std::vector<std::string> inputs;
  for (const auto& p : report_paths) inputs.push_back(p.string());
  write_manifest(out_dir, "compare", inputs, "", 0);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed inertial dead-reckoning toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_profile, synth_errors, synth_out;
  synth->add_option("--profile", synth_profile, "Motion profile config")
      ->required();
  synth->add_option("--errors", synth_errors, "Sensor error config")
      ->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // dr
  auto* dr = app.add_subcommand("dr", "Dead-reckon a dataset (INS baseline)");
  std::string dr_dataset, dr_out, dr_scheme = "rk4";
  bool dr_2d = false;
  dr->add_option("--dataset", dr_dataset, "Dataset directory")->required();
  dr->add_option("--scheme", dr_scheme, "Integration scheme: euler|rk4");
  dr->add_flag("--mode-2d", dr_2d, "Planar platform mode");
  dr->add_option("--out", dr_out, "Output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the PiDR network");
  std::string tr_config, tr_out, tr_resume;
  std::vector<std::string> tr_datasets;
  TrainCliOverrides over;
  double o_lr = 0, o_lphys = -1, o_ldata = -1;
  std::size_t o_batch = 0, o_colloc = 0, o_epochs = 0, o_ckpt_every = 0;
  std::uint64_t o_seed = 0;
  tr->add_option("--config", tr_config, "Training config file (key=value)");
  tr->add_option("--dataset", tr_datasets, "Dataset directories")
      ->required()
      ->expected(-1);
  tr->add_option("--out", tr_out, "Output directory")->required();
  tr->add_option("--resume", tr_resume, "Resume from a training checkpoint");
  auto* f_lr = tr->add_option("--learning-rate", o_lr);
  auto* f_lp = tr->add_option("--lambda-phys", o_lphys);
  auto* f_ld = tr->add_option("--lambda-data", o_ldata);
  auto* f_bs = tr->add_option("--batch-size", o_batch);
  auto* f_nc = tr->add_option("--n-collocation", o_colloc);
  auto* f_me = tr->add_option("--max-epochs", o_epochs);
  auto* f_ce = tr->add_option("--checkpoint-every", o_ckpt_every);
  auto* f_sd = tr->add_option("--seed", o_seed);
  tr->add_flag("--mode-2d", over.mode_2d, "Planar platform mode");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ev_ckpt, ev_dataset, ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint JSON")->required();
  ev->add_option("--dataset", ev_dataset, "Dataset directory")->required();
  ev->add_option("--out", ev_out, "Output directory")->required();

  // compare
  auto* cp = app.add_subcommand("compare", "Combine metric reports");
  std::vector<std::string> cp_reports, cp_labels;
  std::string cp_out;
  cp->add_option("--reports", cp_reports, "Metric report CSVs")
      ->required()
      ->expected(-1);
  cp->add_option("--labels", cp_labels, "Method labels (last = ours)")
      ->required()
      ->expected(-1);
  cp->add_option("--out", cp_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      return cmd_synth(synth_profile, synth_errors, synth_out);
    }
    if (*dr) {
      return cmd_dr(dr_dataset, dr_scheme, dr_2d, dr_out);
    }
    if (*tr) {
      if (*f_lr) over.learning_rate = o_lr;
      if (*f_lp) over.lambda_phys = o_lphys;
      if (*f_ld) over.lambda_data = o_ldata;
      if (*f_bs) over.batch_size = o_batch;
      if (*f_nc) over.n_collocation = o_colloc;
      if (*f_me) over.max_epochs = o_epochs;
      if (*f_ce) over.checkpoint_every = o_ckpt_every;
      if (*f_sd) over.seed = o_seed;
      std::vector<fs::path> dirs(tr_datasets.begin(), tr_datasets.end());
      return cmd_train(tr_config, dirs, tr_out, over, tr_resume);
    }
    if (*ev) {
      return cmd_eval(ev_ckpt, ev_dataset, ev_out);
    }
    if (*cp) {
      std::vector<fs::path> paths(cp_reports.begin(), cp_reports.end());
      return cmd_compare(paths, cp_labels, cp_out);
    }
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
