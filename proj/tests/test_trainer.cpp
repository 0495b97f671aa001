#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pidr/synth.hpp"
#include "pidr/trainer.hpp"

using namespace pidr;

namespace {
const EarthModel wgs84 = EarthModel::wgs84();

NetworkParams scalar_param(double value) {
  NetworkParams p;
  p.weights = {Eigen::MatrixXd::Constant(1, 1, value)};
  p.biases = {Eigen::VectorXd::Zero(1)};
  return p;
}

ParamGradients scalar_grad(const NetworkParams& p, double g) {
  ParamGradients grads = ParamGradients::zeros_like(p);
  grads.weights[0](0, 0) = g;
  return grads;
}

TrainingSet tiny_circle_set(std::uint64_t noise_seed, double duration,
                            double gt_rate, double imu_rate) {
  MotionProfile p;
  p.kind = ProfileKind::circle;
  p.radius = 5.0;
  p.speed = 1.0;
  p.duration = duration;
  p.imu_rate = imu_rate;
  p.gt_rate = gt_rate;
  const PathModel path(p);
  auto imu = inverse_mechanization(path, wgs84);
  if (noise_seed != 0) {
    imu = corrupt(imu, SensorErrorModel::xsens_dot(noise_seed));
  }
  std::vector<GtRow> gt;
  for (const auto& row : path.ground_truth(wgs84).rows) {
    gt.push_back({row.t, row.position, row.velocity, row.euler});
  }
  TrainingSet set;
  set.trajectories.push_back(
      make_trajectory_data("c1", std::move(imu), std::move(gt), p.origin));
  return set;
}
}  // namespace

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
  NetworkParams p = scalar_param(0.7);
  AdamWState s = AdamWState::zeros_like(p);
  adamw_step(p, scalar_grad(p, 0.0), s, 1e-3, 0.0);
  CHECK(p.weights[0](0, 0) == 0.7);
}

TEST_CASE("adamw: first step matches the hand-computed update") {
  // Fresh state, gradient g: m_hat = g, v_hat = g^2, so the step is
  // -lr * g / (|g| + eps).
  const double g = 0.3, lr = 1e-3;
  NetworkParams p = scalar_param(1.0);
  AdamWState s = AdamWState::zeros_like(p);
  adamw_step(p, scalar_grad(p, g), s, lr, 0.0);
  const double expected = 1.0 - lr * g / (std::abs(g) + 1e-8);
  CHECK(p.weights[0](0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adamw: decoupled decay multiplies by (1 - lr wd)") {
  NetworkParams p = scalar_param(2.0);
  AdamWState s = AdamWState::zeros_like(p);
  adamw_step(p, scalar_grad(p, 0.0), s, 0.01, 0.1);
  CHECK(p.weights[0](0, 0) == doctest::Approx(2.0 * (1.0 - 0.01 * 0.1)));
}

TEST_CASE("adamw rejects non-finite gradients") {
  NetworkParams p = scalar_param(1.0);
  AdamWState s = AdamWState::zeros_like(p);
  CHECK_THROWS_AS(adamw_step(p, scalar_grad(p, std::nan("")), s, 1e-3, 0.0),
                  std::runtime_error);
}

TEST_CASE("clip_gradients") {
  NetworkParams p;
  p.weights = {Eigen::MatrixXd(1, 2)};
  p.biases = {Eigen::VectorXd::Zero(2)};

  SUBCASE("below the limit: unchanged") {
    ParamGradients g = ParamGradients::zeros_like(p);
    g.weights[0] << 0.3, 0.4;  // norm 0.5
    const double norm = clip_gradients(g, 1.0);
    CHECK(norm == doctest::Approx(0.5));
    CHECK(g.weights[0](0, 0) == 0.3);
  }

  SUBCASE("above the limit: rescaled to the limit exactly") {
    ParamGradients g = ParamGradients::zeros_like(p);
    g.weights[0] << 0.0, 4.0;  // norm 4
    clip_gradients(g, 1.0);
    CHECK(std::sqrt(g.squared_norm()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.weights[0](0, 1) == 1.0);
  }

  SUBCASE("direction preserved") {
    ParamGradients g = ParamGradients::zeros_like(p);
    g.weights[0] << 3.0, 4.0;  // norm 5
    clip_gradients(g, 1.0);
    const double cos_sim =
        (3.0 * g.weights[0](0, 0) + 4.0 * g.weights[0](0, 1)) /
        (5.0 * std::sqrt(g.squared_norm()));
    CHECK(cos_sim == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("plateau scheduler") {
  SUBCASE("monotone decrease never reduces") {
    PlateauScheduler s{0.1, 3, 1e-7};
    double lr = 1e-3;
    double loss = 1.0;
    for (int i = 0; i < 20; ++i) {
      lr = s.observe(loss, lr);
      loss *= 0.9;
    }
    CHECK(lr == 1e-3);
  }

  SUBCASE("flat loss for exactly patience epochs reduces once") {
    PlateauScheduler s{0.1, 5, 1e-7};
    double lr = 1e-3;
    lr = s.observe(1.0, lr);  // baseline
    for (int i = 0; i < 4; ++i) {
      lr = s.observe(1.0, lr);
      CHECK(lr == 1e-3);
    }
    lr = s.observe(1.0, lr);  // fifth flat epoch
    CHECK(lr == doctest::Approx(1e-4));
  }

  SUBCASE("never drops below the floor") {
    PlateauScheduler s{0.1, 1, 1e-7};
    double lr = 1e-3;
    for (int i = 0; i < 100; ++i) lr = s.observe(1.0, lr);
    CHECK(lr == doctest::Approx(1e-7));
  }
}

TEST_CASE("default config serializes the published software table") {
  const TrainConfig config;
  const std::string expected =
      "activation=relu\n"
      "batch_size=512\n"
      "checkpoint_every=0\n"
      "collocation_points=2000\n"
      "dropout_rate=0.1\n"
      "epsilon_converge=1e-06\n"
      "grad_clip_max_l2=1\n"
      "hidden_layers=4\n"
      "hidden_width=128\n"
      "lambda_data=1\n"
      "lambda_phys=0.1\n"
      "learning_rate=0.001\n"
      "max_epochs=20000\n"
      "mode_2d=0\n"
      "scheduler_factor=0.1\n"
      "scheduler_patience=50\n"
      "seed=1\n"
      "w_eta=1\n"
      "w_p=1\n"
      "w_v=1\n"
      "weight_decay=1e-05\n";
  CHECK(config.serialize() == expected);
  CHECK(config.layer_dims() == NetworkParams::pidr_dims());
}

TEST_CASE("config round trips through serialize/deserialize") {
  TrainConfig c;
  c.learning_rate = 5e-4;
  c.batch_size = 64;
  c.weights.lambda_phys = 0.25;
  c.mode_2d = true;
  c.seed = 99;
  const TrainConfig back = TrainConfig::deserialize(c.serialize());
  CHECK(back.serialize() == c.serialize());
  CHECK_THROWS_AS(TrainConfig::deserialize("no_such_key=1\n"),
                  std::invalid_argument);
}

TEST_CASE("overfit smoke run: data-only loss falls and trains deterministically") {
  TrainingSet set = tiny_circle_set(15, 10.0, 5.0, 50.0);
  TrainConfig config;
  config.weights.lambda_phys = 0.0;
  config.max_epochs = 200;
  config.batch_size = 64;
  config.seed = 4;
  config.dropout_rate = 0.0;

  TrainResult a = train(config, set, wgs84);
  CHECK(a.report.history.size() == 200);
  CHECK(a.report.history.back().total < a.report.history.front().total);
  // lambda_phys = 0: the physics machinery is provably not invoked.
  CHECK(a.report.physics_evaluations == 0);
  for (const auto& rec : a.report.history) {
    CHECK(rec.phys == 0.0);
    CHECK(std::isfinite(rec.total));
  }

  TrainResult b = train(config, set, wgs84);
  REQUIRE(b.report.history.size() == a.report.history.size());
  for (std::size_t i = 0; i < a.report.history.size(); ++i) {
    CHECK(a.report.history[i].total == b.report.history[i].total);
    CHECK(a.report.history[i].data == b.report.history[i].data);
  }
  for (std::size_t l = 0; l < a.params.weights.size(); ++l) {
    CHECK(a.params.weights[l] == b.params.weights[l]);
  }
}

TEST_CASE("training with physics active records physics evaluations") {
  TrainingSet set = tiny_circle_set(15, 10.0, 5.0, 50.0);
  TrainConfig config;
  config.max_epochs = 3;
  config.batch_size = 64;
  config.n_collocation = 40;
  config.seed = 4;
  const TrainResult r = train(config, set, wgs84);
  CHECK(r.report.physics_evaluations == 3 * 40);
  for (const auto& rec : r.report.history) {
    CHECK(rec.phys > 0.0);
  }
}

TEST_CASE("epsilon = inf stops after exactly max_epochs") {
  TrainingSet set = tiny_circle_set(15, 5.0, 5.0, 50.0);
  TrainConfig config;
  config.max_epochs = 7;
  config.batch_size = 32;
  config.epsilon_converge = 1e300;  // everything converges immediately
  TrainResult r = train(config, set, wgs84);
  CHECK(r.report.stop_reason == StopReason::converged);
  CHECK(r.report.history.size() == 1);

  config.epsilon_converge = 1e-300;  // effectively never converges
  TrainingSet set2 = tiny_circle_set(15, 5.0, 5.0, 50.0);
  r = train(config, set2, wgs84);
  CHECK(r.report.stop_reason == StopReason::max_epochs);
  CHECK(r.report.history.size() == 7);
}

TEST_CASE("post-clip gradient norm never exceeds the limit") {
  // Property check through the public pieces: clip then measure.
  RngStream rng(3);
  NetworkParams p = init_params({7, 8, 9}, 2);
  for (int i = 0; i < 50; ++i) {
    ParamGradients g = ParamGradients::zeros_like(p);
    for (auto& w : g.weights) {
      w = Eigen::MatrixXd::NullaryExpr(w.rows(), w.cols(), [&rng]() {
        return rng.next_uniform(-3, 3);
      });
    }
    clip_gradients(g, 1.0);
    CHECK(std::sqrt(g.squared_norm()) <= 1.0 + 1e-12);
  }
}

TEST_CASE("resume reproduces an uninterrupted run bit-for-bit") {
  TrainConfig config;
  config.max_epochs = 6;
  config.batch_size = 32;
  config.n_collocation = 30;
  config.seed = 12;

  TrainingSet set_a = tiny_circle_set(15, 8.0, 5.0, 50.0);
  const TrainResult full = train(config, set_a, wgs84);

  TrainConfig first_half = config;
  first_half.max_epochs = 3;
  TrainingSet set_b = tiny_circle_set(15, 8.0, 5.0, 50.0);
  const TrainResult half = train(first_half, set_b, wgs84);

  const auto path =
      std::filesystem::temp_directory_path() / "pidr_resume_test.json";
  save_train_checkpoint(path, half.snapshot, config.seed);
  const TrainerSnapshot snap = load_train_checkpoint(path);

  TrainingSet set_c = tiny_circle_set(15, 8.0, 5.0, 50.0);
  const TrainResult resumed = train(config, set_c, wgs84, snap);

  REQUIRE(resumed.report.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = resumed.report.history[i];
    const auto& f = full.report.history[i + 3];
    CHECK(r.epoch == f.epoch);
    CHECK(r.total == f.total);
    CHECK(r.data == f.data);
    CHECK(r.phys == f.phys);
    CHECK(r.lr == f.lr);
  }
  for (std::size_t l = 0; l < full.params.weights.size(); ++l) {
    CHECK(resumed.params.weights[l] == full.params.weights[l]);
    CHECK(resumed.params.biases[l] == full.params.biases[l]);
  }
  std::filesystem::remove(path);
}
