#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "pidr/dataset.hpp"
#include "pidr/frames.hpp"
#include "pidr/network.hpp"
#include "pidr/rng.hpp"

namespace pidr {

using Vector9 = Eigen::Matrix<double, 9, 1>;

/// Data-term balances (w_*) and the data/physics mixture (lambda_*).
struct LossWeights {
  double w_p = 1.0;
  double w_v = 1.0;
  double w_eta = 1.0;
  double lambda_data = 1.0;
  double lambda_phys = 0.1;
};

struct LossBreakdown {
  double data = 0.0;
  double phys = 0.0;
  double total = 0.0;
};

/// Weighted MSE over matched prediction/GT pairs; angle differences are
/// wrapped to (-pi, pi] before squaring. Prediction columns are
/// (p, v, eta) stacked as 9-vectors. Throws on an empty batch.
double data_loss(const Eigen::MatrixXd& predictions,
                 std::span<const AlignedSample> gt, const LossWeights& w);

/// Same, also writing d(loss)/d(predictions) into `adjoint` (9 x N).
double data_loss_with_adjoint(const Eigen::MatrixXd& predictions,
                              std::span<const AlignedSample> gt,
                              const LossWeights& w, Eigen::MatrixXd& adjoint);

/// Residual evaluation point: instantaneous latitude/height plus the chart
/// constants of the trajectory's tangent plane. The chart scales are the
/// radii at the chart origin, so the unit-consistent D map reduces to the
/// identity at the origin.
struct ResidualRef {
  double lat = 0.0;
  double h = 0.0;
  double chart_north = 1.0;  // R_M(origin) + h0
  double chart_east = 1.0;   // (R_N(origin) + h0) cos(lat0)
};

ResidualRef make_residual_ref(const GeodeticPosition& chart_origin,
                              const Eigen::Vector3d& ned_pos,
                              const EarthModel& model);

/// Position residual in the NED-meter chart image: dp/dt - S v with
/// S = J_chart * D(lat, h); equals dp/dt - v exactly at the chart origin.
Eigen::Vector3d position_residual(const Eigen::Vector3d& p_dot,
                                  const Eigen::Vector3d& v,
                                  const ResidualRef& ref,
                                  const EarthModel& model);

/// Velocity residual: dv/dt - (C f - (2 w_ie + w_en) x v + g). Inside the
/// gimbal-lock zone it returns a large finite penalty instead of throwing.
Eigen::Vector3d velocity_residual(const Eigen::Vector3d& v_dot,
                                  const Eigen::Vector3d& v,
                                  const Eigen::Vector3d& eta,
                                  const Eigen::Vector3d& f,
                                  const ResidualRef& ref,
                                  const EarthModel& model);

/// Orientation residual: dC/dt (chained through the Euler rates) minus
/// C Omega_ib - (Omega_ie + Omega_en) C.
Eigen::Matrix3d orientation_residual(const Eigen::Vector3d& eta,
                                     const Eigen::Vector3d& eta_dot,
                                     const Eigen::Vector3d& w,
                                     const ResidualRef& ref,
                                     const Eigen::Vector3d& v,
                                     const EarthModel& model);

struct CollocationPoint {
  int traj = 0;
  double t = 0.0;
  ImuSample imu;       // linearly interpolated at t
  ResidualRef ref;
};

struct CollocationBatch {
  std::vector<CollocationPoint> points;
};

/// Draws n_p collocation points: trajectory chosen proportionally to its
/// duration, time uniform within it, IMU linearly interpolated, residual
/// reference from the interpolated GT position.
CollocationBatch sample_collocation(const TrainingSet& set, std::size_t n_p,
                                    RngStream& rng, const EarthModel& model);

struct PhysicsOptions {
  bool mode_2d = false;  // mask the down channels and the non-yaw rows
};

struct PhysicsTerms {
  double total = 0.0;
  double pos = 0.0;
  double vel = 0.0;
  double eta = 0.0;
};

/// Evaluates y (p, v, eta) and its time derivative at a collocation point.
/// Implemented by the network adapter below and by analytic stubs in tests.
using StateEvaluator =
    std::function<void(const CollocationPoint&, Vector9&, Vector9&)>;

/// Mean over the batch of |r_p|^2 + |r_v|^2 + |r_eta|_F^2.
PhysicsTerms physics_loss(const CollocationBatch& batch,
                          const StateEvaluator& eval,
                          const PhysicsOptions& opts,
                          const EarthModel& model);

StateEvaluator make_network_evaluator(const NetworkParams& params,
                                      std::span<const FeatureMap> maps);

/// Training path: batched forward with time tangent, residuals on a
/// reverse-mode tape, and accumulation of grad_scale * d(phys)/d(params)
/// into `grads` (when non-null).
PhysicsTerms physics_loss_and_gradients(const CollocationBatch& batch,
                                        const NetworkParams& params,
                                        std::span<const FeatureMap> maps,
                                        const PhysicsOptions& opts,
                                        const EarthModel& model,
                                        double grad_scale,
                                        ParamGradients* grads);

/// total = lambda_data * data + lambda_phys * phys.
LossBreakdown total_loss(double data, double phys, const LossWeights& w);

}  // namespace pidr
