#include "irltrack/critic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "irltrack/errors.hpp"
#include "irltrack/jacobi.hpp"

namespace irltrack {

CriticBasis::CriticBasis(std::vector<std::vector<int>> exponents) : exponents_(std::move(exponents)) {
  if (exponents_.empty()) throw ConfigError("critic basis: no terms");
  dim_ = static_cast<int>(exponents_.front().size());
  for (const auto& e : exponents_) {
    if (static_cast<int>(e.size()) != dim_) throw ConfigError("critic basis: inconsistent exponent lengths");
    for (int p : e)
      if (p < 0) throw ConfigError("critic basis: negative exponent");
  }
}

CriticBasis CriticBasis::spring_damper() {
  return CriticBasis({{1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}, {3, 0}, {0, 3}});
}

Eigen::VectorXd CriticBasis::theta(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) throw ConfigError("critic basis: z has wrong dimension");
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) {
    double v = 1.0;
    for (int j = 0; j < dim_; ++j) v *= std::pow(z(j), exponents_[i][j]);
    out(i) = v;
  }
  return out;
}

Eigen::MatrixXd CriticBasis::grad_theta(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) throw ConfigError("critic basis: z has wrong dimension");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), dim_);
  for (int i = 0; i < size(); ++i) {
    for (int k = 0; k < dim_; ++k) {
      const int pk = exponents_[i][k];
      if (pk == 0) continue;
      double v = pk * std::pow(z(k), pk - 1);
      for (int j = 0; j < dim_; ++j)
        if (j != k) v *= std::pow(z(j), exponents_[i][j]);
      out(i, k) = v;
    }
  }
  return out;
}

GainConfig GainConfig::defaults(int n) {
  GainConfig cfg;
  cfg.K1 = Eigen::VectorXd::Zero(n);
  cfg.K2 = 0.02 * Eigen::MatrixXd::Identity(n, n);
  return cfg;
}

double check_gains(const GainConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw ConfigError("critic.alpha: must be > 0");
  if (!(cfg.k2 >= 0.0)) throw ConfigError("critic.k2: must be >= 0");
  if (!(cfg.l > 0.0 && cfg.l <= 1.0)) throw ConfigError("critic.l: must lie in (0, 1]");
  if (!(cfg.gamma >= 0.0)) throw ConfigError("critic.gamma: must be >= 0");
  if (!(cfg.T > 0.0)) throw ConfigError("critic.T: must be > 0");
  const Eigen::Index n = cfg.K1.size();
  if (cfg.K2.rows() != n || cfg.K2.cols() != n) throw ConfigError("critic.K2: must be N1 x N1 matching K1");
  if ((cfg.K2 - cfg.K2.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("critic.K2: must be symmetric");

  Eigen::MatrixXd block(n + 1, n + 1);
  block(0, 0) = 1.0;
  block.block(0, 1, 1, n) = -0.5 * cfg.K1.transpose();
  block.block(1, 0, n, 1) = -0.5 * cfg.K1;
  block.bottomRightCorner(n, n) = cfg.K2;
  const double lmin = min_eig_sym(block);
  if (!(lmin > 0.0)) {
    std::ostringstream msg;
    msg << "critic.K1/K2: M1 not positive definite (lambda_min = " << lmin << ")";
    throw ConfigError(msg.str());
  }
  return lmin;
}

double uub_gamma(double g) {
  const double upper = 3.0 - std::sqrt(8.0);
  if (!(g >= 0.0) || g > upper + 1e-15) throw DomainError("uub_gamma: gamma1 must lie in [0, 3 - sqrt(8)]");
  const double half = 0.5 * (1.0 - g);
  double disc = half * half - g;
  // At the upper end the discriminant is zero up to rounding.
  if (disc < 8.0 * std::numeric_limits<double>::epsilon() * half * half) disc = 0.0;
  return half + std::sqrt(disc);
}

Eigen::VectorXd delta_theta(const Eigen::VectorXd& theta_now, const Eigen::VectorXd& theta_then, double gamma,
                            double T) {
  return std::exp(-gamma * T) * theta_now - theta_then;
}

Normalizers normalizers(const Eigen::VectorXd& dtheta) {
  const double m_s = 1.0 + dtheta.squaredNorm();
  return {m_s, dtheta / m_s, dtheta / (m_s * m_s)};
}

CriticWindow::CriticWindow(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("sim.dt: must be > 0");
  if (!(T > 0.0)) throw ConfigError("critic.T: must be > 0");
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("critic.T: T not a multiple of dt");
  steps_ = static_cast<std::size_t>(rounded);
}

void CriticWindow::push(WindowSample s) {
  if (!samples_.empty() && !(s.t > samples_.back().t))
    throw ConfigError("critic window: timestamps must be strictly increasing");
  samples_.push_back(std::move(s));
  while (samples_.size() > steps_ + 1) samples_.pop_front();
}

double window_integrand(const Eigen::VectorXd& z, const Eigen::VectorXd& tau, const Eigen::MatrixXd& Q,
                        const SaturationSpec& spec) {
  return q_cost(z, Q) + utility_closed(tau, spec);
}

Eigen::VectorXd window_delta_theta(const CriticWindow& window, double gamma, double T) {
  return delta_theta(window.newest().theta, window.oldest().theta, gamma, T);
}

std::optional<double> hjb_error(const CriticState& state, double gamma, double T) {
  if (!state.window.ready()) return std::nullopt;
  const double running =
      state.window.discounted_integral<double>(gamma, [](const WindowSample& s) { return s.integrand; });
  return running + state.W_hat.dot(window_delta_theta(state.window, gamma, T));
}

Eigen::VectorXd delta_theta_quadrature(const CriticWindow& window, double gamma) {
  const auto& s = window.samples();
  const double t0 = s.front().t;
  Eigen::VectorXd transport = Eigen::VectorXd::Zero(s.front().theta.size());
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double h = s[k].t - s[k - 1].t;
    const double t_mid = 0.5 * (s[k].t + s[k - 1].t);
    transport += std::exp(-gamma * (t_mid - t0)) * h * s[k].theta_rate_mid;
  }
  const Eigen::VectorXd decay =
      window.discounted_integral<Eigen::VectorXd>(gamma, [](const WindowSample& w) -> Eigen::VectorXd {
        return w.theta;
      });
  return transport - gamma * decay;
}

SigmaIndicator sigma_and_indicator(const Eigen::VectorXd& W, const Eigen::MatrixXd& grad_theta,
                                   const Eigen::VectorXd& z_dot) {
  const double sigma = W.dot(grad_theta * z_dot);
  return {sigma, sigma < 0.0 ? 0 : 1};
}

Eigen::VectorXd stabilizing_term(const Eigen::VectorXd& W, const Eigen::MatrixXd& grad_theta,
                                 const Eigen::MatrixXd& G, const Eigen::VectorXd& z_dot, const SaturationSpec& spec) {
  const Eigen::VectorXd t = tau(G, grad_theta, W, spec);
  const Eigen::VectorXd th = t.array().tanh().matrix();
  // R^-1 (I - B) is diagonal.
  const Eigen::VectorXd gain = (1.0 - th.array().square()).matrix().cwiseQuotient(spec.R_diag);
  const Eigen::MatrixXd gt = grad_theta * G;  // N1 x m
  return 0.5 * gt * gain.asDiagonal() * (gt.transpose() * W) - grad_theta * z_dot;
}

Eigen::VectorXd m_vector(const Eigen::MatrixXd& grad_theta, const Eigen::MatrixXd& G, const Eigen::VectorXd& t,
                         double u_max) {
  Eigen::VectorXd diff(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double sgn = t(i) > 0.0 ? 1.0 : (t(i) < 0.0 ? -1.0 : 0.0);
    diff(i) = std::tanh(t(i)) - sgn;
  }
  return u_max * (grad_theta * (G * diff));
}

Eigen::VectorXd critic_update_derivative(const Eigen::VectorXd& W, double e_hat, const Eigen::VectorXd& dtheta, int xi,
                                         const Eigen::VectorXd& stab, double m_integral, const GainConfig& cfg) {
  const Normalizers nz = normalizers(dtheta);
  // std::pow(0, 0) == 1, so k2 = 0 gives the constant gain 1 + l for every e_hat.
  const double g = std::pow(std::abs(e_hat), cfg.k2) + cfg.l;
  const Eigen::VectorXd robust = cfg.K1 * nz.phi.dot(W) - cfg.K2 * W - nz.theta_bar * m_integral;
  return -cfg.alpha * g * nz.theta_bar * e_hat + cfg.alpha * xi * stab + cfg.alpha * g * robust;
}

double switching_fraction(double sigma, const Eigen::VectorXd& v, const Eigen::VectorXd& base_rate,
                          const Eigen::VectorXd& switched_rate, double h) {
  const double pull = h * switched_rate.dot(v);
  if (sigma < 0.0 || pull >= 0.0) return 1.0;
  const double after_base = sigma + h * base_rate.dot(v);
  if (after_base <= 0.0) return 0.0;
  return std::min(1.0, after_base / -pull);
}

}  // namespace irltrack
