#pragma once

// Saturated optimal control u = -u_m tanh(tau) and the non-quadratic
// control penalty U(u) = 2 u_m sum_i R_i int_0^{u_i} atanh(v / u_m) dv that
// makes it optimal.

#include <Eigen/Dense>

namespace irltrack {

struct SaturationSpec {
  double u_max = 2.0;         // actuator bound u_m
  Eigen::VectorXd R_diag;     // diagonal of the control penalty, all > 0

  /// Throws ConfigError unless u_max > 0 and every R_i > 0.
  SaturationSpec(double u_max, Eigen::VectorXd R_diag);

  int inputs() const noexcept { return static_cast<int>(R_diag.size()); }
};

/// tau = (1 / (2 u_m)) R^-1 G^T grad_theta^T W.
/// G is dim(z) x m, grad_theta is N1 x dim(z), W has N1 entries.
Eigen::VectorXd tau(const Eigen::MatrixXd& G, const Eigen::MatrixXd& grad_theta, const Eigen::VectorXd& W,
                    const SaturationSpec& spec);

/// -u_m tanh(tau), componentwise.
Eigen::VectorXd control(const Eigen::VectorXd& tau, const SaturationSpec& spec);

/// Closed form of U(-u_m tanh(tau)):
///   2 u_m^2 tau^T R tanh(tau) + u_m^2 sum_i R_i log(1 - tanh^2(tau_i)).
/// The log term is evaluated as -2 log cosh(tau_i), which stays finite for all finite tau.
double utility_closed(const Eigen::VectorXd& tau, const SaturationSpec& spec);

/// U(u) by adaptive Simpson quadrature of 2 u_m R_i atanh(v / u_m), absolute
/// tolerance 1e-10 per component. Throws DomainError if any |u_i| >= u_m.
double utility_quadrature(const Eigen::VectorXd& u, const SaturationSpec& spec);

/// e^T Q e with e the leading Q.rows() entries of z.
double q_cost(const Eigen::VectorXd& z, const Eigen::MatrixXd& Q);

struct TanhDiffBound {
  double lhs;    // ||tanh(a) - tanh(b)||
  double bound;  // sqrt(sum_i min(|a_i - b_i|^2, 4))
};

TanhDiffBound tanh_diff_bound(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// log(1 - tanh^2(x)) without cancellation or underflow.
double log_sech2(double x);

}  // namespace irltrack
