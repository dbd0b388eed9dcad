// Constant-velocity Kalman filter for the platform state [position, velocity].
// The transition and observation models are linear, so the "extended" filter
// reduces to the standard predict/update cycle.
#pragma once

#include <Eigen/Dense>

#include "lander/common.hpp"

namespace lander {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;
using Mat36 = Eigen::Matrix<double, 3, 6>;

struct EkfState {
  Vec6 x = Vec6::Zero();
  Mat6 P = Mat6::Identity();
  Mat6 Q = 1e-4 * Mat6::Identity();
  Mat3 R_meas = 1e-6 * Mat3::Identity();
  Mat6 A = Mat6::Identity();
  Mat36 H = Mat36::Zero();

  Vec3 position() const { return x.head<3>(); }
  Vec3 velocity() const { return x.tail<3>(); }
};

/// Identity with the position/velocity coupling blocks set to dt.
inline Mat6 constant_velocity_transition(double dt) {
  Mat6 A = Mat6::Identity();
  A.topRightCorner<3, 3>() = dt * Mat3::Identity();
  return A;
}

inline Mat36 position_observation() {
  Mat36 H = Mat36::Zero();
  H.leftCols<3>() = Mat3::Identity();
  return H;
}

inline EkfState make_ekf(const Vec6& x0, const Mat6& P0, double dt, double q, double r) {
  EkfState s;
  s.x = x0;
  s.P = P0;
  s.Q = q * Mat6::Identity();
  s.R_meas = r * Mat3::Identity();
  s.A = constant_velocity_transition(dt);
  s.H = position_observation();
  return s;
}

inline EkfState ekf_predict(const EkfState& s) {
  EkfState out = s;
  out.x = s.A * s.x;
  out.P = s.A * s.P * s.A.transpose() + s.Q;
  out.P = 0.5 * (out.P + out.P.transpose());
  return out;
}

struct EkfUpdateResult {
  EkfState state;
  Vec3 innovation;
  Mat3 innovation_covariance;
  /// Normalized innovation squared y^T S^-1 y.
  double nis = 0.0;
};

inline EkfUpdateResult ekf_update_detailed(const EkfState& s, const Vec3& z) {
  if (!z.allFinite()) throw ContractError("ekf_update: non-finite measurement");
  const Vec3 y = z - s.H * s.x;
  const Mat3 S = s.H * s.P * s.H.transpose() + s.R_meas;
  // S is symmetric, so its condition number is the eigenvalue ratio.
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(S, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev(0) > 0.0) || ev(2) / ev(0) > 1e12)
    throw FilterDivergenceError("ekf_update: innovation covariance is numerically singular");
  const Eigen::LDLT<Mat3> S_ldlt(S);
  const Eigen::Matrix<double, 6, 3> K = S_ldlt.solve(s.H * s.P.transpose()).transpose();

  EkfUpdateResult r;
  r.state = s;
  r.state.x = s.x + K * y;
  r.state.P = (Mat6::Identity() - K * s.H) * s.P;
  r.state.P = 0.5 * (r.state.P + r.state.P.transpose());
  r.innovation = y;
  r.innovation_covariance = S;
  r.nis = y.dot(S_ldlt.solve(y));
  return r;
}

inline EkfState ekf_update(const EkfState& s, const Vec3& z) { return ekf_update_detailed(s, z).state; }

}  // namespace lander
