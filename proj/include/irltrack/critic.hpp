#pragma once

// Critic-only integral reinforcement learning: value approximation
// V(z) ~ W^T theta(z), the sliding [t-T, t] window that turns the Bellman
// equation into an interval identity free of drift dynamics, and the
// variable-gain update law for W.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "irltrack/policy.hpp"

namespace irltrack {

/// Polynomial basis theta_i(z) = prod_j z_j^{p_ij} with analytic gradient.
class CriticBasis {
 public:
  explicit CriticBasis(std::vector<std::vector<int>> exponents);

  /// (z1, z2, z1^2, z2^2, z1 z2, z1^3, z2^3).
  static CriticBasis spring_damper();

  int size() const noexcept { return static_cast<int>(exponents_.size()); }
  int input_dim() const noexcept { return dim_; }
  const std::vector<std::vector<int>>& exponents() const noexcept { return exponents_; }

  Eigen::VectorXd theta(const Eigen::VectorXd& z) const;
  /// N1 x dim(z) Jacobian, row i = d theta_i / dz.
  Eigen::MatrixXd grad_theta(const Eigen::VectorXd& z) const;

 private:
  std::vector<std::vector<int>> exponents_;
  int dim_ = 0;
};

struct GainConfig {
  double alpha = 20.0;   // base learning rate
  double k2 = 1.0;       // HJB-error exponent in the variable gain
  double l = 0.1;        // gain offset, in (0, 1]
  Eigen::VectorXd K1;    // N1
  Eigen::MatrixXd K2;    // N1 x N1, symmetric
  double gamma = 0.1;    // discount, 1/s
  double T = 0.05;       // IRL interval, s

  /// Benchmark defaults for a basis of size n: K1 = 0, K2 = 0.02 I.
  static GainConfig defaults(int n);
};

/// Assembles [[1, -K1^T/2], [-K1/2, K2]] and returns its smallest eigenvalue.
/// Throws ConfigError when the scalar gains are out of range, K2 is not
/// symmetric, or the block matrix is not positive definite.
double check_gains(const GainConfig& cfg);

/// Gamma = (1 - g)/2 + sqrt((1 - g)^2 / 4 - g), defined for 0 <= g <= 3 - sqrt(8).
/// Throws DomainError outside that range.
double uub_gamma(double gamma1);

/// e^{-gamma T} theta(z(t)) - theta(z(t - T)).
Eigen::VectorXd delta_theta(const Eigen::VectorXd& theta_now, const Eigen::VectorXd& theta_then, double gamma,
                            double T);

struct Normalizers {
  double m_s;                 // 1 + |dtheta|^2
  Eigen::VectorXd phi;        // dtheta / m_s, |phi| <= 1/2
  Eigen::VectorXd theta_bar;  // dtheta / m_s^2, |theta_bar| <= 9 / (16 sqrt 3)
};

Normalizers normalizers(const Eigen::VectorXd& dtheta);

/// One trajectory sample held in the IRL window.
struct WindowSample {
  double t = 0.0;
  Eigen::VectorXd z;
  Eigen::VectorXd theta;
  Eigen::MatrixXd grad_theta;
  Eigen::VectorXd z_dot;   // backward difference (z_k - z_{k-1}) / dt
  Eigen::VectorXd theta_rate_mid;  // grad_theta((z_k + z_{k-1}) / 2) z_dot; zero for the first sample
  Eigen::VectorXd u_hat;
  double integrand = 0.0;  // Q(z) + U_hat(u_hat)
  Eigen::VectorXd m;       // M vector, see m_vector
};

/// Samples on a uniform dt grid covering exactly [t - T, t] once full.
class CriticWindow {
 public:
  /// Throws ConfigError unless T is a positive integer multiple of dt.
  CriticWindow(double T, double dt);

  void push(WindowSample s);
  /// True once the window spans the full interval T.
  bool ready() const noexcept { return samples_.size() == steps_ + 1; }
  std::size_t steps() const noexcept { return steps_; }
  const std::deque<WindowSample>& samples() const noexcept { return samples_; }
  const WindowSample& oldest() const { return samples_.front(); }
  const WindowSample& newest() const { return samples_.back(); }

  /// Trapezoidal int_{t-T}^{t} e^{-gamma (tau - t + T)} f(tau) dtau over the stored samples.
  template <class R, class F>
  R discounted_integral(double gamma, F&& f) const {
    const double t0 = samples_.front().t;
    R prev = f(samples_[0]);
    R acc = 0.0 * prev;
    for (std::size_t k = 1; k < samples_.size(); ++k) {
      R cur = std::exp(-gamma * (samples_[k].t - t0)) * f(samples_[k]);
      acc = acc + 0.5 * (samples_[k].t - samples_[k - 1].t) * (prev + cur);
      prev = cur;
    }
    return acc;
  }

 private:
  std::size_t steps_;
  std::deque<WindowSample> samples_;
};

struct CriticState {
  Eigen::VectorXd W_hat;
  CriticWindow window;
};

/// Q(z) + U_hat(tau): the running cost integrated by the Bellman window.
double window_integrand(const Eigen::VectorXd& z, const Eigen::VectorXd& tau, const Eigen::MatrixXd& Q,
                        const SaturationSpec& spec);

/// e_hat = int e^{-gamma (tau - t + T)} [Q + U_hat] dtau + W^T dtheta.
/// Empty until the window is full.
std::optional<double> hjb_error(const CriticState& state, double gamma, double T);

/// dtheta over the current window (requires ready()).
Eigen::VectorXd window_delta_theta(const CriticWindow& window, double gamma, double T);

/// Integral form of dtheta: int e^{-gamma (tau - t + T)} [grad_theta z_dot - gamma theta] dtau,
/// from the stored backward differences. Each difference is paired with
/// grad_theta at the interval midpoint (theta_rate_mid) and discounted there;
/// the gamma theta part uses the trapezoid rule.
Eigen::VectorXd delta_theta_quadrature(const CriticWindow& window, double gamma);

struct SigmaIndicator {
  double sigma;  // W^T grad_theta z_dot
  int xi;        // 0 iff sigma < 0
};

SigmaIndicator sigma_and_indicator(const Eigen::VectorXd& W, const Eigen::MatrixXd& grad_theta,
                                   const Eigen::VectorXd& z_dot);

/// -dSigma/dW with the saturated policy substituted:
///   (1/2) grad_theta G R^-1 (I - B) G^T grad_theta^T W - grad_theta z_dot,
/// B = diag(tanh^2(tau)). The caller scales by alpha * Xi.
Eigen::VectorXd stabilizing_term(const Eigen::VectorXd& W, const Eigen::MatrixXd& grad_theta,
                                 const Eigen::MatrixXd& G, const Eigen::VectorXd& z_dot, const SaturationSpec& spec);

/// grad_theta G u_m (tanh(tau) - sgn(tau)), sgn(0) = 0.
Eigen::VectorXd m_vector(const Eigen::MatrixXd& grad_theta, const Eigen::MatrixXd& G, const Eigen::VectorXd& tau,
                         double u_max);

/// Fraction in [0, 1] of the Xi-gated rate to apply over a step of length h.
/// With Sigma = W^T v (v = grad_theta z_dot held over the step), a full
/// explicit step moves Sigma by h (base + switched)^T v, which at dt = 1e-3
/// overshoots the Sigma = 0 switching surface by orders of magnitude. The
/// fraction stops the switched contribution at the surface, as the
/// continuous-time law would; 1 when the term does not decrease Sigma.
double switching_fraction(double sigma, const Eigen::VectorXd& v, const Eigen::VectorXd& base_rate,
                          const Eigen::VectorXd& switched_rate, double h);

/// W_dot = -a g theta_bar e + a Xi stab + a g ((K1 phi^T - K2) W - theta_bar m_integral),
/// g = |e|^k2 + l with |0|^0 = 1. m_integral is the scalar window integral of W^T M.
Eigen::VectorXd critic_update_derivative(const Eigen::VectorXd& W, double e_hat, const Eigen::VectorXd& dtheta, int xi,
                                         const Eigen::VectorXd& stab, double m_integral, const GainConfig& cfg);

}  // namespace irltrack
