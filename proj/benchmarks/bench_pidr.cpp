#include <benchmark/benchmark.h>

#include "pidr/loss.hpp"
#include "pidr/mechanization.hpp"
#include "pidr/network.hpp"
#include "pidr/synth.hpp"

using namespace pidr;

namespace {

const EarthModel kModel = EarthModel::wgs84();

MotionProfile bench_profile() {
  MotionProfile p;
  p.kind = ProfileKind::circle;
  p.radius = 5.0;
  p.speed = 1.0;
  p.duration = 30.0;
  p.imu_rate = 100.0;
  p.gt_rate = 5.0;
  return p;
}

void BM_integrate_step(benchmark::State& state) {
  const PathModel path(bench_profile());
  NavState s = path.initial_nav_state(kModel);
  const ImuSample imu = path.imu_at(0.0, kModel);
  for (auto _ : state) {
    s = integrate_step(s, imu, 0.01, IntegrationScheme::rk4, kModel);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_integrate_step);

void BM_dead_reckon_30s_100hz(benchmark::State& state) {
  const PathModel path(bench_profile());
  const auto imu = inverse_mechanization(path, kModel);
  const NavState init = path.initial_nav_state(kModel);
  for (auto _ : state) {
    auto traj = dead_reckon(init, imu, {}, kModel);
    benchmark::DoNotOptimize(traj);
  }
}
BENCHMARK(BM_dead_reckon_30s_100hz);

void BM_forward_batch512(benchmark::State& state) {
  const NetworkParams params = init_params(NetworkParams::pidr_dims(), 1);
  const Eigen::MatrixXd input = Eigen::MatrixXd::Random(7, 512);
  for (auto _ : state) {
    auto out = forward(params, input, NetMode::eval);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_forward_batch512);

void BM_forward_backward_batch512(benchmark::State& state) {
  const NetworkParams params = init_params(NetworkParams::pidr_dims(), 1);
  const Eigen::MatrixXd input = Eigen::MatrixXd::Random(7, 512);
  ParamGradients grads = ParamGradients::zeros_like(params);
  for (auto _ : state) {
    ForwardTrace trace;
    const Eigen::MatrixXd out = forward(params, input, NetMode::eval, 0,
                                        &trace);
    grads.set_zero();
    backward(params, trace, out, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_forward_backward_batch512);

void BM_physics_loss_grads_256pts(benchmark::State& state) {
  MotionProfile profile = bench_profile();
  const PathModel path(profile);
  auto imu = inverse_mechanization(path, kModel);
  std::vector<GtRow> gt;
  for (const auto& row : path.ground_truth(kModel).rows) {
    gt.push_back({row.t, row.position, row.velocity, row.euler});
  }
  TrainingSet set;
  set.trajectories.push_back(
      make_trajectory_data("b", std::move(imu), std::move(gt),
                           profile.origin));
  normalize_inputs(set);
  std::vector<FeatureMap> maps{FeatureMap(
      set.stats, set.trajectories[0].t_begin, set.trajectories[0].t_end)};
  const NetworkParams params = init_params(NetworkParams::pidr_dims(), 1);
  RngStream rng = RngStream::derive(1, "bench");
  const CollocationBatch batch = sample_collocation(set, 256, rng, kModel);
  ParamGradients grads = ParamGradients::zeros_like(params);
  for (auto _ : state) {
    grads.set_zero();
    auto terms = physics_loss_and_gradients(batch, params, maps, {}, kModel,
                                            1.0, &grads);
    benchmark::DoNotOptimize(terms);
  }
}
BENCHMARK(BM_physics_loss_grads_256pts);

}  // namespace

BENCHMARK_MAIN();
