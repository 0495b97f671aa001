#include "pidr/network.hpp"

#include "pidr/errors.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pidr/rng.hpp"

namespace pidr {

namespace {

constexpr int kCheckpointFormatVersion = 1;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) {
  return z.cwiseMax(0.0);
}

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z) {
  // Right-derivative convention: slope 0 at exactly zero.
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

std::vector<int> NetworkParams::layer_dims() const {
  std::vector<int> dims;
  if (weights.empty()) return dims;
  dims.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& w : weights) dims.push_back(static_cast<int>(w.rows()));
  return dims;
}

std::size_t NetworkParams::n_parameters() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

NetworkParams init_params(const std::vector<int>& dims, std::uint64_t seed,
                          double dropout_rate) {
  if (dims.size() < 2) {
    throw std::invalid_argument("init_params: need at least input and output");
  }
  NetworkParams params;
  params.dropout_rate = dropout_rate;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    RngStream rng = RngStream::derive(seed, "init", l);
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) {
        w(i, j) = stddev * rng.next_normal();
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

Eigen::MatrixXd forward(const NetworkParams& params,
                        const Eigen::MatrixXd& input, NetMode mode,
                        std::uint64_t dropout_seed, ForwardTrace* trace) {
  if (!input.allFinite()) {
    throw std::invalid_argument("forward: non-finite input");
  }
  if (input.rows() != params.weights.front().cols()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  const std::size_t n_layers = params.n_layers();
  const double keep = 1.0 - params.dropout_rate;
  const bool train = mode == NetMode::train && params.dropout_rate > 0.0;

  if (trace) {
    trace->act.assign(n_layers + 1, {});
    trace->preact.assign(n_layers, {});
    trace->mask.assign(n_layers, {});
    trace->act_dot.clear();
    trace->preact_dot.clear();
    trace->has_tangent = false;
    trace->train_mode = train;
    trace->act[0] = input;
  }

  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z =
        (params.weights[l] * a).colwise() + params.biases[l];
    if (l + 1 == n_layers) {
      a = z;  // linear output layer
    } else {
      a = relu(z);
      if (train) {
        RngStream rng = RngStream::derive(dropout_seed, "dropout", l);
        Eigen::MatrixXd mask(a.rows(), a.cols());
        for (Eigen::Index col = 0; col < a.cols(); ++col) {
          for (Eigen::Index row = 0; row < a.rows(); ++row) {
            mask(row, col) = rng.next_double() < keep ? 1.0 / keep : 0.0;
          }
        }
        a = a.cwiseProduct(mask);
        if (trace) trace->mask[l] = std::move(mask);
      }
    }
    if (trace) {
      trace->preact[l] = std::move(z);
      trace->act[l + 1] = a;
    }
  }
  return a;
}

void forward_with_tangent(const NetworkParams& params,
                          const Eigen::MatrixXd& input,
                          const Eigen::MatrixXd& input_dot,
                          Eigen::MatrixXd& out, Eigen::MatrixXd& out_dot,
                          ForwardTrace* trace) {
  if (!input.allFinite() || !input_dot.allFinite()) {
    throw std::invalid_argument("forward_with_tangent: non-finite input");
  }
  if (input.rows() != params.weights.front().cols() ||
      input_dot.rows() != input.rows() || input_dot.cols() != input.cols()) {
    throw std::invalid_argument("forward_with_tangent: shape mismatch");
  }
  const std::size_t n_layers = params.n_layers();

  if (trace) {
    trace->act.assign(n_layers + 1, {});
    trace->preact.assign(n_layers, {});
    trace->mask.assign(n_layers, {});
    trace->act_dot.assign(n_layers + 1, {});
    trace->preact_dot.assign(n_layers, {});
    trace->has_tangent = true;
    trace->train_mode = false;
    trace->act[0] = input;
    trace->act_dot[0] = input_dot;
  }

  Eigen::MatrixXd a = input;
  Eigen::MatrixXd a_dot = input_dot;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z =
        (params.weights[l] * a).colwise() + params.biases[l];
    Eigen::MatrixXd z_dot = params.weights[l] * a_dot;
    if (l + 1 == n_layers) {
      a = z;
      a_dot = z_dot;
    } else {
      const Eigen::MatrixXd gate = relu_mask(z);
      a = z.cwiseProduct(gate);
      a_dot = z_dot.cwiseProduct(gate);
    }
    if (trace) {
      trace->preact[l] = std::move(z);
      trace->preact_dot[l] = std::move(z_dot);
      trace->act[l + 1] = a;
      trace->act_dot[l + 1] = a_dot;
    }
  }
  out = std::move(a);
  out_dot = std::move(a_dot);
}

void forward_with_time_derivative(const NetworkParams& params,
                                  const Eigen::Matrix<double, 7, 1>& input,
                                  double time_scale,
                                  Eigen::VectorXd& out,
                                  Eigen::VectorXd& out_dot) {
  Eigen::MatrixXd input_dot = Eigen::MatrixXd::Zero(7, 1);
  input_dot(0, 0) = time_scale;
  Eigen::MatrixXd y, y_dot;
  forward_with_tangent(params, input, input_dot, y, y_dot, nullptr);
  out = y.col(0);
  out_dot = y_dot.col(0);
}

ParamGradients ParamGradients::zeros_like(const NetworkParams& params) {
  ParamGradients g;
  for (const auto& w : params.weights) {
    g.weights.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    g.biases.emplace_back(Eigen::VectorXd::Zero(b.size()));
  }
  return g;
}

void ParamGradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double ParamGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

void ParamGradients::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

bool ParamGradients::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

void backward(const NetworkParams& params, const ForwardTrace& trace,
              const Eigen::MatrixXd& out_adjoint, ParamGradients& grads) {
  const std::size_t n_layers = params.n_layers();
  Eigen::MatrixXd a_bar = out_adjoint;
  for (std::size_t li = n_layers; li-- > 0;) {
    Eigen::MatrixXd z_bar;
    if (li + 1 == n_layers) {
      z_bar = std::move(a_bar);
    } else {
      Eigen::MatrixXd h_bar = std::move(a_bar);
      if (trace.train_mode && trace.mask[li].size() > 0) {
        h_bar = h_bar.cwiseProduct(trace.mask[li]);
      }
      z_bar = h_bar.cwiseProduct(relu_mask(trace.preact[li]));
    }
    grads.weights[li].noalias() += z_bar * trace.act[li].transpose();
    grads.biases[li].noalias() += z_bar.rowwise().sum();
    if (li > 0) {
      a_bar.noalias() = params.weights[li].transpose() * z_bar;
    }
  }
}

void backward_with_tangent(const NetworkParams& params,
                           const ForwardTrace& trace,
                           const Eigen::MatrixXd& out_adjoint,
                           const Eigen::MatrixXd& outdot_adjoint,
                           ParamGradients& grads) {
  if (!trace.has_tangent) {
    throw std::invalid_argument(
        "backward_with_tangent: trace has no tangent channel");
  }
  const std::size_t n_layers = params.n_layers();
  Eigen::MatrixXd a_bar = out_adjoint;
  Eigen::MatrixXd adot_bar = outdot_adjoint;
  for (std::size_t li = n_layers; li-- > 0;) {
    Eigen::MatrixXd z_bar, zdot_bar;
    if (li + 1 == n_layers) {
      z_bar = std::move(a_bar);
      zdot_bar = std::move(adot_bar);
    } else {
      // a = gate .* z, a_dot = gate .* z_dot with gate = step(z). The gate's
      // own derivative w.r.t. z is zero almost everywhere, so both adjoints
      // pass through the same gate.
      const Eigen::MatrixXd gate = relu_mask(trace.preact[li]);
      z_bar = a_bar.cwiseProduct(gate);
      zdot_bar = adot_bar.cwiseProduct(gate);
    }
    grads.weights[li].noalias() += z_bar * trace.act[li].transpose();
    grads.weights[li].noalias() += zdot_bar * trace.act_dot[li].transpose();
    grads.biases[li].noalias() += z_bar.rowwise().sum();
    if (li > 0) {
      a_bar.noalias() = params.weights[li].transpose() * z_bar;
      adot_bar.noalias() = params.weights[li].transpose() * zdot_bar;
    }
  }
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n_rows = j.size();
  if (n_rows == 0) throw std::runtime_error("checkpoint: empty matrix");
  const auto n_cols = j.at(0).size();
  Eigen::MatrixXd m(n_rows, n_cols);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (j.at(i).size() != n_cols) {
      throw std::runtime_error("checkpoint: ragged matrix");
    }
    for (std::size_t k = 0; k < n_cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j.at(i).at(k).get<double>();
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const NetCheckpoint& ckpt) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["layer_dims"] = ckpt.params.layer_dims();
  j["dropout_rate"] = ckpt.params.dropout_rate;
  j["seed"] = ckpt.seed;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& w : ckpt.params.weights) weights.push_back(matrix_to_json(w));
  for (const auto& b : ckpt.params.biases) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) arr.push_back(b[i]);
    biases.push_back(std::move(arr));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["input_mean"] = std::vector<double>(ckpt.stats.mean.data(),
                                        ckpt.stats.mean.data() + 6);
  j["input_scale"] = std::vector<double>(ckpt.stats.scale.data(),
                                         ckpt.stats.scale.data() + 6);

  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

NetCheckpoint load_checkpoint(const std::filesystem::path& path,
                              const std::vector<int>& expected_dims) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format version");
  }
  const auto dims = j.at("layer_dims").get<std::vector<int>>();
  if (!expected_dims.empty() && dims != expected_dims) {
    throw std::runtime_error("checkpoint: layer shape mismatch");
  }
  NetCheckpoint ckpt;
  ckpt.params.dropout_rate = j.at("dropout_rate").get<double>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() + 1 != dims.size() || biases.size() != weights.size()) {
    throw std::runtime_error("checkpoint: layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd w = matrix_from_json(weights.at(l));
    if (w.rows() != dims[l + 1] || w.cols() != dims[l]) {
      throw std::runtime_error("checkpoint: weight shape mismatch");
    }
    const auto& barr = biases.at(l);
    if (static_cast<int>(barr.size()) != dims[l + 1]) {
      throw std::runtime_error("checkpoint: bias shape mismatch");
    }
    Eigen::VectorXd b(dims[l + 1]);
    for (int i = 0; i < dims[l + 1]; ++i) b[i] = barr.at(i).get<double>();
    ckpt.params.weights.push_back(std::move(w));
    ckpt.params.biases.push_back(std::move(b));
  }
  const auto mean = j.at("input_mean").get<std::vector<double>>();
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  if (mean.size() != 6 || scale.size() != 6) {
    throw std::runtime_error("checkpoint: bad normalization stats");
  }
  for (int k = 0; k < 6; ++k) {
    ckpt.stats.mean[k] = mean[k];
    ckpt.stats.scale[k] = scale[k];
  }
  return ckpt;
}

}  // namespace pidr
