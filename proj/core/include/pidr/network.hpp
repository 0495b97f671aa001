#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pidr/dataset.hpp"

namespace pidr {

/// Fully connected ReLU network parameters. The PiDR architecture is
/// layer_dims() == {7, 128, 128, 128, 128, 9}; smaller instances are used
/// by the finite-difference oracles in the tests.
struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;   // biases[l]: dims[l+1]
  double dropout_rate = 0.1;

  std::size_t n_layers() const { return weights.size(); }
  std::vector<int> layer_dims() const;
  std::size_t n_parameters() const;
  bool all_finite() const;

  static std::vector<int> pidr_dims() { return {7, 128, 128, 128, 128, 9}; }
};

/// He-style initialization: weights ~ N(0, 2 / fan_in), biases zero.
/// Deterministic under seed.
NetworkParams init_params(const std::vector<int>& dims, std::uint64_t seed,
                          double dropout_rate = 0.1);

enum class NetMode { train, eval };

/// Cached forward computation for the reverse pass. `act[0]` is the input;
/// `act[l]` the post-activation (post-dropout) output of layer l. The
/// tangent channel mirrors the activations when the forward carried a time
/// tangent.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> act;
  std::vector<Eigen::MatrixXd> preact;
  std::vector<Eigen::MatrixXd> mask;  // dropout masks, train mode only
  std::vector<Eigen::MatrixXd> act_dot;
  std::vector<Eigen::MatrixXd> preact_dot;
  bool has_tangent = false;
  bool train_mode = false;
};

/// Batch forward pass; input columns are samples. In train mode inverted
/// dropout (keep prob 1 - rate, survivors scaled by 1/keep) is applied
/// after each hidden activation, with masks drawn deterministically from
/// dropout_seed. Throws on non-finite input.
Eigen::MatrixXd forward(const NetworkParams& params,
                        const Eigen::MatrixXd& input, NetMode mode,
                        std::uint64_t dropout_seed = 0,
                        ForwardTrace* trace = nullptr);

/// Forward pass carrying a forward-mode tangent (directional derivative of
/// the input, typically the time channel scaled by the normalization
/// chain). Evaluated in the eval composition: dropout is off, so the
/// differentiated function is deterministic. ReLU kinks use the
/// right-derivative convention.
void forward_with_tangent(const NetworkParams& params,
                          const Eigen::MatrixXd& input,
                          const Eigen::MatrixXd& input_dot,
                          Eigen::MatrixXd& out, Eigen::MatrixXd& out_dot,
                          ForwardTrace* trace = nullptr);

/// Convenience wrapper: output and its derivative w.r.t. physical time for
/// one sample, given d(normalized time)/dt = time_scale.
void forward_with_time_derivative(const NetworkParams& params,
                                  const Eigen::Matrix<double, 7, 1>& input,
                                  double time_scale,
                                  Eigen::VectorXd& out,
                                  Eigen::VectorXd& out_dot);

struct ParamGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static ParamGradients zeros_like(const NetworkParams& params);
  void set_zero();
  double squared_norm() const;
  void scale(double s);
  bool all_finite() const;
};

/// Reverse pass: accumulates d(loss)/d(params) into `grads` given the
/// adjoint of the network output. The trace must come from a forward on the
/// same params.
void backward(const NetworkParams& params, const ForwardTrace& trace,
              const Eigen::MatrixXd& out_adjoint, ParamGradients& grads);

/// Reverse pass over a tangent-carrying forward: also consumes the adjoint
/// of the output time-derivative, which is how physics-loss gradients
/// differentiate through d(output)/dt.
void backward_with_tangent(const NetworkParams& params,
                           const ForwardTrace& trace,
                           const Eigen::MatrixXd& out_adjoint,
                           const Eigen::MatrixXd& outdot_adjoint,
                           ParamGradients& grads);

/// Versioned JSON checkpoint: layer shapes, seed, dropout, input
/// normalization stats and the parameters themselves.
struct NetCheckpoint {
  NetworkParams params;
  InputStats stats;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path,
                     const NetCheckpoint& ckpt);

/// Loads and validates a checkpoint. Shape inconsistencies (stored arrays
/// vs declared dims, or declared dims vs `expected_dims` when non-empty)
/// raise std::runtime_error.
NetCheckpoint load_checkpoint(const std::filesystem::path& path,
                              const std::vector<int>& expected_dims = {});

}  // namespace pidr
