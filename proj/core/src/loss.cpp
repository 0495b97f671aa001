#include "pidr/loss.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pidr/autodiff.hpp"
#include "pidr/detail/kin.hpp"

namespace pidr {

namespace {

constexpr double kGimbalPenalty = 1e3;

double scalar_value(double x) { return x; }
double scalar_value(const Var& x) { return x.value(); }

template <class S>
struct Residuals {
  detail::V3<S> r_p;
  detail::V3<S> r_v;
  detail::M3<S> r_eta;
};

/// All three strapdown residuals for one evaluation point. The network
/// outputs are scalar type S (double or tape Var); IMU and reference
/// quantities are constants.
template <class S>
Residuals<S> strapdown_residuals(const detail::V3<S>& p_dot,
                                 const detail::V3<S>& v,
                                 const detail::V3<S>& v_dot,
                                 const detail::V3<S>& eta,
                                 const detail::V3<S>& eta_dot,
                                 const Eigen::Vector3d& f,
                                 const Eigen::Vector3d& w,
                                 const ResidualRef& ref,
                                 const detail::EarthParams& ep,
                                 bool mode_2d) {
  Residuals<S> out;

  if (std::abs(scalar_value(eta[1])) >=
      std::numbers::pi / 2.0 - kGimbalLockMargin) {
    // Large finite penalty instead of a throw: training must not crash on a
    // transient bad orientation estimate.
    for (int i = 0; i < 3; ++i) {
      out.r_p[i] = S(kGimbalPenalty);
      out.r_v[i] = S(kGimbalPenalty);
      for (int j = 0; j < 3; ++j) out.r_eta[i][j] = S(kGimbalPenalty);
    }
    return out;
  }

  // Unit-consistent D map in the chart image (identity at the chart origin).
  const double rm = detail::meridian_radius(ref.lat, ep);
  const double rn = detail::transverse_radius(ref.lat, ep);
  const double s_n = ref.chart_north / (rm + ref.h);
  const double s_e = ref.chart_east / ((rn + ref.h) * std::cos(ref.lat));

  out.r_p[0] = p_dot[0] - s_n * v[0];
  out.r_p[1] = p_dot[1] - s_e * v[1];
  out.r_p[2] = p_dot[2] - v[2];

  const auto w_ie_d = detail::earth_rate_n(ref.lat, ep);
  const auto g_d = detail::gravity_n(ref.lat, ref.h, ep);
  const detail::M3<S> c = detail::dcm_from_euler(eta[0], eta[1], eta[2]);

  const detail::V3<S> w_en =
      detail::transport_rate<S>(v, S(ref.lat), S(ref.h), ep);
  const detail::V3<S> coriolis_rate = {2.0 * w_ie_d[0] + w_en[0],
                                       2.0 * w_ie_d[1] + w_en[1],
                                       2.0 * w_ie_d[2] + w_en[2]};

  const detail::V3<S> f_s = {S(f.x()), S(f.y()), S(f.z())};
  const detail::V3<S> cf = detail::mat_vec(c, f_s);
  const detail::V3<S> cor = detail::cross(coriolis_rate, v);
  for (int i = 0; i < 3; ++i) {
    out.r_v[i] = v_dot[i] - (cf[i] - cor[i] + g_d[i]);
  }

  const detail::M3<S> c_dot = detail::dcm_rate_from_euler(
      eta[0], eta[1], eta[2], eta_dot[0], eta_dot[1], eta_dot[2]);
  const detail::V3<S> w_s = {S(w.x()), S(w.y()), S(w.z())};
  const detail::M3<S> omega_ib = detail::skew(w_s);
  detail::V3<S> w_in;
  for (int i = 0; i < 3; ++i) w_in[i] = w_ie_d[i] + w_en[i];
  const detail::M3<S> omega_in = detail::skew(w_in);
  const detail::M3<S> rhs =
      detail::mat_sub(detail::mat_mul(c, omega_ib), detail::mat_mul(omega_in, c));
  out.r_eta = detail::mat_sub(c_dot, rhs);

  if (mode_2d) {
    out.r_p[2] = S(0.0);
    out.r_v[2] = S(0.0);
    for (int k = 0; k < 3; ++k) {
      out.r_eta[2][k] = S(0.0);
      out.r_eta[k][2] = S(0.0);
    }
  }
  return out;
}

template <class S>
void split_outputs(const S* y, const S* y_dot, detail::V3<S>& p_dot,
                   detail::V3<S>& v, detail::V3<S>& v_dot, detail::V3<S>& eta,
                   detail::V3<S>& eta_dot) {
  p_dot = {y_dot[0], y_dot[1], y_dot[2]};
  v = {y[3], y[4], y[5]};
  v_dot = {y_dot[3], y_dot[4], y_dot[5]};
  eta = {y[6], y[7], y[8]};
  eta_dot = {y_dot[6], y_dot[7], y_dot[8]};
}

}  // namespace

double data_loss(const Eigen::MatrixXd& predictions,
                 std::span<const AlignedSample> gt, const LossWeights& w) {
  Eigen::MatrixXd unused;
  return data_loss_with_adjoint(predictions, gt, w, unused);
}

double data_loss_with_adjoint(const Eigen::MatrixXd& predictions,
                              std::span<const AlignedSample> gt,
                              const LossWeights& w, Eigen::MatrixXd& adjoint) {
  const auto n = static_cast<Eigen::Index>(gt.size());
  if (n == 0) {
    throw std::invalid_argument("data_loss: empty batch");
  }
  if (predictions.rows() != 9 || predictions.cols() != n) {
    throw std::invalid_argument("data_loss: prediction shape mismatch");
  }
  adjoint.setZero(9, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const AlignedSample& s = gt[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) {
      const double dp = predictions(k, i) - s.gt.pos[k];
      const double dv = predictions(3 + k, i) - s.gt.vel[k];
      const double de = wrap_pi(predictions(6 + k, i) - s.gt.euler[k]);
      loss += w.w_p * dp * dp + w.w_v * dv * dv + w.w_eta * de * de;
      adjoint(k, i) = 2.0 * w.w_p * dp * inv_n;
      adjoint(3 + k, i) = 2.0 * w.w_v * dv * inv_n;
      adjoint(6 + k, i) = 2.0 * w.w_eta * de * inv_n;
    }
  }
  return loss * inv_n;
}

ResidualRef make_residual_ref(const GeodeticPosition& chart_origin,
                              const Eigen::Vector3d& ned_pos,
                              const EarthModel& model) {
  const auto r0 = radii_of_curvature(chart_origin.lat, model);
  ResidualRef ref;
  ref.chart_north = r0.meridian + chart_origin.height;
  ref.chart_east = (r0.transverse + chart_origin.height) *
                   std::cos(chart_origin.lat);
  ref.lat = chart_origin.lat + ned_pos.x() / ref.chart_north;
  ref.h = chart_origin.height - ned_pos.z();
  return ref;
}

Eigen::Vector3d position_residual(const Eigen::Vector3d& p_dot,
                                  const Eigen::Vector3d& v,
                                  const ResidualRef& ref,
                                  const EarthModel& model) {
  const auto ep = model.params();
  const double rm = detail::meridian_radius(ref.lat, ep);
  const double rn = detail::transverse_radius(ref.lat, ep);
  const double s_n = ref.chart_north / (rm + ref.h);
  const double s_e = ref.chart_east / ((rn + ref.h) * std::cos(ref.lat));
  return {p_dot.x() - s_n * v.x(), p_dot.y() - s_e * v.y(),
          p_dot.z() - v.z()};
}

Eigen::Vector3d velocity_residual(const Eigen::Vector3d& v_dot,
                                  const Eigen::Vector3d& v,
                                  const Eigen::Vector3d& eta,
                                  const Eigen::Vector3d& f,
                                  const ResidualRef& ref,
                                  const EarthModel& model) {
  detail::V3<double> pd{}, vv{v.x(), v.y(), v.z()},
      vd{v_dot.x(), v_dot.y(), v_dot.z()}, et{eta.x(), eta.y(), eta.z()},
      ed{};
  const auto r = strapdown_residuals<double>(
      pd, vv, vd, et, ed, f, Eigen::Vector3d::Zero(), ref, model.params(),
      false);
  return {r.r_v[0], r.r_v[1], r.r_v[2]};
}

Eigen::Matrix3d orientation_residual(const Eigen::Vector3d& eta,
                                     const Eigen::Vector3d& eta_dot,
                                     const Eigen::Vector3d& w,
                                     const ResidualRef& ref,
                                     const Eigen::Vector3d& v,
                                     const EarthModel& model) {
  detail::V3<double> pd{}, vv{v.x(), v.y(), v.z()}, vd{},
      et{eta.x(), eta.y(), eta.z()},
      ed{eta_dot.x(), eta_dot.y(), eta_dot.z()};
  const auto r = strapdown_residuals<double>(
      pd, vv, vd, et, ed, Eigen::Vector3d::Zero(), w, ref, model.params(),
      false);
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(i, j) = r.r_eta[i][j];
  }
  return out;
}

CollocationBatch sample_collocation(const TrainingSet& set, std::size_t n_p,
                                    RngStream& rng, const EarthModel& model) {
  if (n_p == 0) {
    throw std::invalid_argument("sample_collocation: n_p must be >= 1");
  }
  if (set.trajectories.empty()) {
    throw std::invalid_argument("sample_collocation: empty training set");
  }
  std::vector<double> cumulative;
  cumulative.reserve(set.trajectories.size());
  double total = 0.0;
  for (const auto& traj : set.trajectories) {
    total += traj.t_end - traj.t_begin;
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_collocation: zero total duration");
  }

  CollocationBatch batch;
  batch.points.reserve(n_p);
  for (std::size_t i = 0; i < n_p; ++i) {
    const double u = rng.next_double() * total;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
    const auto& traj = set.trajectories[k];
    const double t =
        traj.t_begin + rng.next_double() * (traj.t_end - traj.t_begin);
    CollocationPoint pt;
    pt.traj = static_cast<int>(k);
    pt.t = t;
    pt.imu = interpolate_imu(traj.imu, t);
    pt.ref = make_residual_ref(
        traj.origin, interpolate_gt_position(traj.aligned, t), model);
    batch.points.push_back(std::move(pt));
  }
  return batch;
}

PhysicsTerms physics_loss(const CollocationBatch& batch,
                          const StateEvaluator& eval,
                          const PhysicsOptions& opts,
                          const EarthModel& model) {
  if (batch.points.empty()) {
    throw std::invalid_argument("physics_loss: empty batch");
  }
  const auto ep = model.params();
  PhysicsTerms terms;
  Vector9 y, y_dot;
  for (const auto& pt : batch.points) {
    eval(pt, y, y_dot);
    detail::V3<double> p_dot, v, v_dot, eta, eta_dot;
    split_outputs(y.data(), y_dot.data(), p_dot, v, v_dot, eta, eta_dot);
    const auto r = strapdown_residuals<double>(
        p_dot, v, v_dot, eta, eta_dot, pt.imu.specific_force,
        pt.imu.angular_rate, pt.ref, ep, opts.mode_2d);
    for (int i = 0; i < 3; ++i) {
      terms.pos += r.r_p[i] * r.r_p[i];
      terms.vel += r.r_v[i] * r.r_v[i];
      for (int j = 0; j < 3; ++j) terms.eta += r.r_eta[i][j] * r.r_eta[i][j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.points.size());
  terms.pos *= inv_n;
  terms.vel *= inv_n;
  terms.eta *= inv_n;
  terms.total = terms.pos + terms.vel + terms.eta;
  return terms;
}

StateEvaluator make_network_evaluator(const NetworkParams& params,
                                      std::span<const FeatureMap> maps) {
  return [&params, maps](const CollocationPoint& pt, Vector9& y,
                         Vector9& y_dot) {
    const FeatureMap& fm = maps[static_cast<std::size_t>(pt.traj)];
    const Eigen::Matrix<double, 7, 1> u =
        fm.map(pt.t, pt.imu.specific_force, pt.imu.angular_rate);
    Eigen::VectorXd out, out_dot;
    forward_with_time_derivative(params, u, fm.time_scale(), out, out_dot);
    y = out;
    y_dot = out_dot;
  };
}

PhysicsTerms physics_loss_and_gradients(const CollocationBatch& batch,
                                        const NetworkParams& params,
                                        std::span<const FeatureMap> maps,
                                        const PhysicsOptions& opts,
                                        const EarthModel& model,
                                        double grad_scale,
                                        ParamGradients* grads) {
  const auto n = static_cast<Eigen::Index>(batch.points.size());
  if (n == 0) {
    throw std::invalid_argument("physics_loss_and_gradients: empty batch");
  }
  Eigen::MatrixXd input(7, n), input_dot(7, n);
  input_dot.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = batch.points[static_cast<std::size_t>(i)];
    const FeatureMap& fm = maps[static_cast<std::size_t>(pt.traj)];
    input.col(i) = fm.map(pt.t, pt.imu.specific_force, pt.imu.angular_rate);
    input_dot(0, i) = fm.time_scale();
  }

  ForwardTrace trace;
  Eigen::MatrixXd y, y_dot;
  forward_with_tangent(params, input, input_dot, y, y_dot, &trace);

  const auto ep = model.params();
  const double inv_n = 1.0 / static_cast<double>(n);
  PhysicsTerms terms;
  Eigen::MatrixXd y_adj = Eigen::MatrixXd::Zero(9, n);
  Eigen::MatrixXd ydot_adj = Eigen::MatrixXd::Zero(9, n);

  Tape tape;
  std::vector<double> adjoints;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = batch.points[static_cast<std::size_t>(i)];
    tape.clear();
    std::array<Var, 9> yv, dv;
    for (int k = 0; k < 9; ++k) {
      yv[k] = Var::leaf(tape, y(k, i));
      dv[k] = Var::leaf(tape, y_dot(k, i));
    }
    detail::V3<Var> p_dot, v, v_dot, eta, eta_dot;
    split_outputs(yv.data(), dv.data(), p_dot, v, v_dot, eta, eta_dot);
    const auto r = strapdown_residuals<Var>(
        p_dot, v, v_dot, eta, eta_dot, pt.imu.specific_force,
        pt.imu.angular_rate, pt.ref, ep, opts.mode_2d);

    Var sum_p(0.0), sum_v(0.0), sum_eta(0.0);
    for (int k = 0; k < 3; ++k) {
      sum_p += square(r.r_p[k]);
      sum_v += square(r.r_v[k]);
      for (int j = 0; j < 3; ++j) sum_eta += square(r.r_eta[k][j]);
    }
    terms.pos += sum_p.value();
    terms.vel += sum_v.value();
    terms.eta += sum_eta.value();

    if (grads) {
      const Var point_loss = sum_p + sum_v + sum_eta;
      tape.backward(point_loss.index(), adjoints);
      for (int k = 0; k < 9; ++k) {
        if (yv[k].index() >= 0 &&
            yv[k].index() < static_cast<int>(adjoints.size())) {
          y_adj(k, i) = adjoints[static_cast<std::size_t>(yv[k].index())];
        }
        if (dv[k].index() >= 0 &&
            dv[k].index() < static_cast<int>(adjoints.size())) {
          ydot_adj(k, i) = adjoints[static_cast<std::size_t>(dv[k].index())];
        }
      }
    }
  }

  terms.pos *= inv_n;
  terms.vel *= inv_n;
  terms.eta *= inv_n;
  terms.total = terms.pos + terms.vel + terms.eta;

  if (grads) {
    y_adj *= inv_n * grad_scale;
    ydot_adj *= inv_n * grad_scale;
    backward_with_tangent(params, trace, y_adj, ydot_adj, *grads);
  }
  return terms;
}

LossBreakdown total_loss(double data, double phys, const LossWeights& w) {
  LossBreakdown out;
  out.data = data;
  out.phys = phys;
  out.total = w.lambda_data * data + w.lambda_phys * phys;
  return out;
}

}  // namespace pidr
