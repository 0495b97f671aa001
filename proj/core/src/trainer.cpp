#include "pidr/trainer.hpp"

#include "pidr/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pidr/rng.hpp"

namespace pidr {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::string fmt15(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

}  // namespace

std::vector<int> TrainConfig::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(7);
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
  dims.push_back(9);
  return dims;
}

std::string TrainConfig::serialize() const {
  std::map<std::string, std::string> kv;
  kv["activation"] = activation;
  kv["batch_size"] = std::to_string(batch_size);
  kv["checkpoint_every"] = std::to_string(checkpoint_every);
  kv["collocation_points"] = std::to_string(n_collocation);
  kv["dropout_rate"] = fmt15(dropout_rate);
  kv["epsilon_converge"] = fmt15(epsilon_converge);
  kv["grad_clip_max_l2"] = fmt15(grad_clip_max);
  kv["hidden_layers"] = std::to_string(hidden_layers);
  kv["hidden_width"] = std::to_string(hidden_width);
  kv["lambda_data"] = fmt15(weights.lambda_data);
  kv["lambda_phys"] = fmt15(weights.lambda_phys);
  kv["learning_rate"] = fmt15(learning_rate);
  kv["max_epochs"] = std::to_string(max_epochs);
  kv["mode_2d"] = mode_2d ? "1" : "0";
  kv["scheduler_factor"] = fmt15(scheduler_factor);
  kv["scheduler_patience"] = std::to_string(scheduler_patience);
  kv["seed"] = std::to_string(seed);
  kv["w_eta"] = fmt15(weights.w_eta);
  kv["w_p"] = fmt15(weights.w_p);
  kv["w_v"] = fmt15(weights.w_v);
  kv["weight_decay"] = fmt15(weight_decay);
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  return out.str();
}

TrainConfig TrainConfig::deserialize(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key=value, got '" + line +
                                  "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const auto as_double = [&] { return std::strtod(value.c_str(), nullptr); };
    const auto as_size = [&] {
      return static_cast<std::size_t>(std::strtoull(value.c_str(), nullptr, 10));
    };
    if (key == "activation") c.activation = value;
    else if (key == "batch_size") c.batch_size = as_size();
    else if (key == "checkpoint_every") c.checkpoint_every = as_size();
    else if (key == "collocation_points") c.n_collocation = as_size();
    else if (key == "dropout_rate") c.dropout_rate = as_double();
    else if (key == "epsilon_converge") c.epsilon_converge = as_double();
    else if (key == "grad_clip_max_l2") c.grad_clip_max = as_double();
    else if (key == "hidden_layers") c.hidden_layers = static_cast<int>(as_size());
    else if (key == "hidden_width") c.hidden_width = static_cast<int>(as_size());
    else if (key == "lambda_data") c.weights.lambda_data = as_double();
    else if (key == "lambda_phys") c.weights.lambda_phys = as_double();
    else if (key == "learning_rate") c.learning_rate = as_double();
    else if (key == "max_epochs") c.max_epochs = as_size();
    else if (key == "mode_2d") c.mode_2d = value == "1" || value == "true";
    else if (key == "scheduler_factor") c.scheduler_factor = as_double();
    else if (key == "scheduler_patience") c.scheduler_patience = as_size();
    else if (key == "seed") c.seed = std::strtoull(value.c_str(), nullptr, 10);
    else if (key == "w_eta") c.weights.w_eta = as_double();
    else if (key == "w_p") c.weights.w_p = as_double();
    else if (key == "w_v") c.weights.w_v = as_double();
    else if (key == "weight_decay") c.weight_decay = as_double();
    else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0) || batch_size == 0 ||
      n_collocation == 0 || !(scheduler_factor > 0.0) ||
      scheduler_patience == 0 || !(grad_clip_max > 0.0) ||
      !(epsilon_converge > 0.0) || max_epochs == 0 || hidden_layers <= 0 ||
      hidden_width <= 0 || dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("train config: invalid field value");
  }
  if (activation != "relu") {
    throw std::invalid_argument("train config: only relu is supported");
  }
}

AdamWState AdamWState::zeros_like(const NetworkParams& params) {
  AdamWState s;
  for (const auto& w : params.weights) {
    s.m_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    s.v_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    s.m_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
    s.v_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
  }
  return s;
}

void adamw_step(NetworkParams& params, const ParamGradients& grads,
                AdamWState& state, double lr, double weight_decay) {
  if (!grads.all_finite()) {
    throw std::runtime_error("adamw_step: non-finite gradients");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));

  const auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v.array().matrix() +
        (1.0 - kBeta2) * g.cwiseProduct(g);
    // Decoupled decay first, then the adaptive step (both from this step's
    // incoming parameter value scaled sequentially, matching the reference
    // AdamW formulation).
    p *= (1.0 - lr * weight_decay);
    p.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
  };

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], state.m_w[l], state.v_w[l], grads.weights[l]);
    update(params.biases[l], state.m_b[l], state.v_b[l], grads.biases[l]);
  }
}

double clip_gradients(ParamGradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) {
    grads.scale(max_norm / norm);
  }
  return norm;
}

double PlateauScheduler::observe(double total, double lr) {
  const double margin = 1e-8 * std::abs(best);
  if (total < best - margin) {
    best = total;
    epochs_since_improve = 0;
    return lr;
  }
  ++epochs_since_improve;
  if (epochs_since_improve >= patience) {
    epochs_since_improve = 0;
    return std::max(lr * factor, min_lr);
  }
  return lr;
}

TrainResult train(const TrainConfig& config, TrainingSet& set,
                  const EarthModel& model,
                  const std::optional<TrainerSnapshot>& resume,
                  const CheckpointSink& sink) {
  config.validate();
  if (set.trajectories.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  const auto t_start = std::chrono::steady_clock::now();

  TrainerSnapshot snap;
  if (resume) {
    snap = *resume;
    set.stats = snap.stats;
  } else {
    normalize_inputs(set);
    snap.params = init_params(config.layer_dims(), config.seed,
                              config.dropout_rate);
    snap.stats = set.stats;
    snap.adam = AdamWState::zeros_like(snap.params);
    snap.next_epoch = 0;
    snap.lr = config.learning_rate;
  }

  std::vector<FeatureMap> maps;
  maps.reserve(set.trajectories.size());
  for (const auto& traj : set.trajectories) {
    maps.emplace_back(set.stats, traj.t_begin, traj.t_end);
  }

  // Pooled supervised samples; features are static across epochs.
  struct SampleRef {
    const AlignedSample* sample;
  };
  std::vector<SampleRef> pool;
  for (std::size_t k = 0; k < set.trajectories.size(); ++k) {
    for (const auto& s : set.trajectories[k].aligned) {
      pool.push_back({&s});
    }
  }
  const std::size_t n_total = pool.size();
  Eigen::MatrixXd features(7, static_cast<Eigen::Index>(n_total));
  {
    std::size_t col = 0;
    for (std::size_t k = 0; k < set.trajectories.size(); ++k) {
      for (const auto& s : set.trajectories[k].aligned) {
        features.col(static_cast<Eigen::Index>(col++)) =
            maps[k].map(s.imu.t, s.imu.specific_force, s.imu.angular_rate);
      }
    }
  }

  const bool use_physics = config.weights.lambda_phys != 0.0;
  const PhysicsOptions phys_opts{config.mode_2d};

  PlateauScheduler scheduler{config.scheduler_factor, config.scheduler_patience,
                             1e-7, snap.sched_best, snap.sched_since};

  TrainResult result;
  TrainReport& report = result.report;
  report.stop_reason = StopReason::max_epochs;

  ParamGradients grads = ParamGradients::zeros_like(snap.params);
  std::vector<std::size_t> order(n_total);

  for (std::size_t epoch = snap.next_epoch; epoch < config.max_epochs;
       ++epoch) {
    // Seeded shuffle of the pooled samples.
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle_rng = RngStream::derive(config.seed, "shuffle", epoch);
    for (std::size_t i = n_total; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
    }

    const std::size_t n_batches = (n_total + config.batch_size - 1) /
                                  config.batch_size;

    // One fresh collocation set per epoch, split across the batches.
    CollocationBatch colloc;
    if (use_physics) {
      RngStream colloc_rng =
          RngStream::derive(config.seed, "collocation", epoch);
      colloc = sample_collocation(set, config.n_collocation, colloc_rng,
                                  model);
    }
    const std::size_t share =
        use_physics ? config.n_collocation / n_batches : 0;

    double data_sq_sum = 0.0;
    double phys_sq_sum = 0.0;
    std::size_t phys_points = 0;
    bool aborted = false;

    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, n_total);
      const auto nb = static_cast<Eigen::Index>(hi - lo);

      Eigen::MatrixXd batch_in(7, nb);
      std::vector<AlignedSample> batch_gt;
      batch_gt.reserve(static_cast<std::size_t>(nb));
      for (Eigen::Index i = 0; i < nb; ++i) {
        const std::size_t idx = order[lo + static_cast<std::size_t>(i)];
        batch_in.col(i) = features.col(static_cast<Eigen::Index>(idx));
        batch_gt.push_back(*pool[idx].sample);
      }

      const std::uint64_t dropout_seed = RngStream::hash_tag(
          RngStream::hash_tag(config.seed, "dropout", epoch), "batch", b);

      ForwardTrace trace;
      const Eigen::MatrixXd pred = forward(snap.params, batch_in,
                                           NetMode::train, dropout_seed,
                                           &trace);
      Eigen::MatrixXd adjoint;
      const double batch_data =
          data_loss_with_adjoint(pred, batch_gt, config.weights, adjoint);
      grads.set_zero();
      adjoint *= config.weights.lambda_data;
      backward(snap.params, trace, adjoint, grads);

      double batch_phys = 0.0;
      std::size_t batch_share = 0;
      if (use_physics) {
        const std::size_t c_lo = b * share;
        const std::size_t c_hi = (b + 1 == n_batches)
                                     ? colloc.points.size()
                                     : (b + 1) * share;
        batch_share = c_hi - c_lo;
        if (batch_share > 0) {
          CollocationBatch slice;
          slice.points.assign(colloc.points.begin() + static_cast<long>(c_lo),
                              colloc.points.begin() + static_cast<long>(c_hi));
          const PhysicsTerms terms = physics_loss_and_gradients(
              slice, snap.params, maps, phys_opts, model,
              config.weights.lambda_phys, &grads);
          batch_phys = terms.total;
          report.physics_evaluations += batch_share;
        }
      }

      const double batch_total = config.weights.lambda_data * batch_data +
                                 config.weights.lambda_phys * batch_phys;
      if (!std::isfinite(batch_total) || !grads.all_finite()) {
        aborted = true;  // parameters keep their last good values
        break;
      }

      clip_gradients(grads, config.grad_clip_max);
      adamw_step(snap.params, grads, snap.adam, snap.lr, config.weight_decay);

      data_sq_sum += batch_data * static_cast<double>(nb);
      phys_sq_sum += batch_phys * static_cast<double>(batch_share);
      phys_points += batch_share;
    }

    if (aborted) {
      report.stop_reason = StopReason::nan_abort;
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.data = data_sq_sum / static_cast<double>(n_total);
    rec.phys = phys_points > 0
                   ? phys_sq_sum / static_cast<double>(phys_points)
                   : 0.0;
    rec.total = config.weights.lambda_data * rec.data +
                config.weights.lambda_phys * rec.phys;
    rec.lr = snap.lr;
    report.history.push_back(rec);

    snap.lr = scheduler.observe(rec.total, snap.lr);
    snap.next_epoch = epoch + 1;
    snap.sched_best = scheduler.best;
    snap.sched_since = scheduler.epochs_since_improve;

    if (sink && config.checkpoint_every > 0 &&
        (epoch + 1) % config.checkpoint_every == 0) {
      sink(epoch + 1, snap);
    }

    if (std::abs(rec.total) < config.epsilon_converge) {
      report.stop_reason = StopReason::converged;
      break;
    }
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  result.params = snap.params;
  result.stats = snap.stats;
  result.snapshot = snap;
  return result;
}

namespace {

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from(const nlohmann::json& j) {
  const auto n_rows = j.size();
  const auto n_cols = j.at(0).size();
  Eigen::MatrixXd m(n_rows, n_cols);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t k = 0; k < n_cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j.at(i).at(k).get<double>();
    }
  }
  return m;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  }
  return v;
}

}  // namespace

void save_train_checkpoint(const std::filesystem::path& path,
                           const TrainerSnapshot& snapshot,
                           std::uint64_t seed) {
  // Base schema matches the network checkpoint so load_checkpoint() can
  // read the inference part of the file.
  nlohmann::json j;
  j["format_version"] = 1;
  j["layer_dims"] = snapshot.params.layer_dims();
  j["dropout_rate"] = snapshot.params.dropout_rate;
  j["seed"] = seed;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& w : snapshot.params.weights) weights.push_back(mat_json(w));
  for (const auto& b : snapshot.params.biases) biases.push_back(vec_json(b));
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["input_mean"] = std::vector<double>(snapshot.stats.mean.data(),
                                        snapshot.stats.mean.data() + 6);
  j["input_scale"] = std::vector<double>(snapshot.stats.scale.data(),
                                         snapshot.stats.scale.data() + 6);

  nlohmann::json t;
  t["next_epoch"] = snapshot.next_epoch;
  t["lr"] = snapshot.lr;
  // JSON has no infinity; a fresh scheduler best is stored as a huge cap.
  t["sched_best"] = std::isfinite(snapshot.sched_best)
                        ? snapshot.sched_best
                        : 1e308;
  t["sched_since"] = snapshot.sched_since;
  t["adam_step"] = snapshot.adam.step;
  nlohmann::json mw = nlohmann::json::array(), vw = nlohmann::json::array();
  nlohmann::json mb = nlohmann::json::array(), vb = nlohmann::json::array();
  for (const auto& m : snapshot.adam.m_w) mw.push_back(mat_json(m));
  for (const auto& m : snapshot.adam.v_w) vw.push_back(mat_json(m));
  for (const auto& m : snapshot.adam.m_b) mb.push_back(vec_json(m));
  for (const auto& m : snapshot.adam.v_b) vb.push_back(vec_json(m));
  t["adam_m_w"] = std::move(mw);
  t["adam_v_w"] = std::move(vw);
  t["adam_m_b"] = std::move(mb);
  t["adam_v_b"] = std::move(vb);
  j["trainer_state"] = std::move(t);

  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

TrainerSnapshot load_train_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  if (!j.contains("trainer_state")) {
    throw std::runtime_error(path.string() + ": not a training checkpoint");
  }
  TrainerSnapshot snap;
  snap.params.dropout_rate = j.at("dropout_rate").get<double>();
  for (const auto& w : j.at("weights")) {
    snap.params.weights.push_back(mat_from(w));
  }
  for (const auto& b : j.at("biases")) {
    snap.params.biases.push_back(vec_from(b));
  }
  const auto dims = j.at("layer_dims").get<std::vector<int>>();
  if (snap.params.layer_dims() != dims) {
    throw std::runtime_error(path.string() + ": layer shape mismatch");
  }
  const auto mean = j.at("input_mean").get<std::vector<double>>();
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  for (int k = 0; k < 6; ++k) {
    snap.stats.mean[k] = mean.at(static_cast<std::size_t>(k));
    snap.stats.scale[k] = scale.at(static_cast<std::size_t>(k));
  }
  const auto& t = j.at("trainer_state");
  snap.next_epoch = t.at("next_epoch").get<std::size_t>();
  snap.lr = t.at("lr").get<double>();
  snap.sched_best = t.at("sched_best").get<double>();
  snap.sched_since = t.at("sched_since").get<std::size_t>();
  snap.adam.step = t.at("adam_step").get<std::size_t>();
  for (const auto& m : t.at("adam_m_w")) snap.adam.m_w.push_back(mat_from(m));
  for (const auto& m : t.at("adam_v_w")) snap.adam.v_w.push_back(mat_from(m));
  for (const auto& m : t.at("adam_m_b")) snap.adam.m_b.push_back(vec_from(m));
  for (const auto& m : t.at("adam_v_b")) snap.adam.v_b.push_back(vec_from(m));
  return snap;
}

}  // namespace pidr
