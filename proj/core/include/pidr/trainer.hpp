#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pidr/loss.hpp"
#include "pidr/network.hpp"

namespace pidr {

/// Training hyperparameters. Defaults are the PiDR software configuration.
struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  std::size_t batch_size = 512;
  std::size_t n_collocation = 2000;
  double scheduler_factor = 0.1;
  std::size_t scheduler_patience = 50;
  double grad_clip_max = 1.0;  // global l2 norm
  double epsilon_converge = 1e-6;
  std::size_t max_epochs = 20000;
  std::uint64_t seed = 1;
  LossWeights weights;
  bool mode_2d = false;
  int hidden_layers = 4;
  int hidden_width = 128;
  std::string activation = "relu";
  double dropout_rate = 0.1;
  std::size_t checkpoint_every = 0;  // epochs; 0 = only at stop

  std::vector<int> layer_dims() const;

  /// Sorted key=value snapshot of the configuration.
  std::string serialize() const;
  static TrainConfig deserialize(const std::string& text);

  void validate() const;
};

struct AdamWState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::size_t step = 0;

  static AdamWState zeros_like(const NetworkParams& params);
};

/// One AdamW update: bias-corrected moments (beta1 0.9, beta2 0.999,
/// eps 1e-8) plus decoupled weight decay applied directly to the
/// parameters. Throws on non-finite gradients.
void adamw_step(NetworkParams& params, const ParamGradients& grads,
                AdamWState& state, double lr, double weight_decay);

/// Scales all gradients by max_norm / norm when the global l2 norm exceeds
/// max_norm. Returns the pre-clip norm.
double clip_gradients(ParamGradients& grads, double max_norm);

/// Reduce-on-plateau: when the best observed total has not improved by at
/// least a 1e-8 relative margin for `patience` consecutive epochs, the
/// learning rate is multiplied by `factor` (floored at 1e-7).
struct PlateauScheduler {
  double factor = 0.1;
  std::size_t patience = 50;
  double min_lr = 1e-7;
  double best = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improve = 0;

  double observe(double total, double lr);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double total = 0.0;
  double data = 0.0;
  double phys = 0.0;
  double lr = 0.0;
};

enum class StopReason { converged, max_epochs, nan_abort };

struct TrainReport {
  std::vector<EpochRecord> history;
  StopReason stop_reason = StopReason::max_epochs;
  double wall_time_s = 0.0;
  std::size_t physics_evaluations = 0;  // collocation points evaluated
};

/// Everything needed to continue training bit-for-bit: parameters,
/// optimizer moments, scheduler state and the epoch cursor.
struct TrainerSnapshot {
  NetworkParams params;
  InputStats stats;
  AdamWState adam;
  std::size_t next_epoch = 0;  // 0-based epoch index to run next
  double lr = 0.0;
  double sched_best = std::numeric_limits<double>::infinity();
  std::size_t sched_since = 0;
};

struct TrainResult {
  NetworkParams params;
  InputStats stats;
  TrainReport report;
  TrainerSnapshot snapshot;  // state at stop, reusable for resume
};

using CheckpointSink =
    std::function<void(std::size_t epoch, const TrainerSnapshot&)>;

/// Runs the PiDR training loop on the set (input normalization stats are
/// computed here unless resuming). Per epoch: seeded shuffle, minibatches
/// of at most batch_size, a fresh collocation set of n_collocation points
/// split across the epoch's batches, backprop, gradient clipping, AdamW,
/// then the plateau scheduler and the |total| < epsilon convergence test.
TrainResult train(const TrainConfig& config, TrainingSet& set,
                  const EarthModel& model,
                  const std::optional<TrainerSnapshot>& resume = std::nullopt,
                  const CheckpointSink& sink = nullptr);

/// Full training checkpoint; the file is a superset of the network
/// checkpoint schema, so load_checkpoint() can read the network part.
void save_train_checkpoint(const std::filesystem::path& path,
                           const TrainerSnapshot& snapshot,
                           std::uint64_t seed);
TrainerSnapshot load_train_checkpoint(const std::filesystem::path& path);

}  // namespace pidr
