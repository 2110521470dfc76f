#include "irltrack/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irltrack/errors.hpp"

namespace irltrack {
namespace {

constexpr double kQuadratureTol = 1e-10;
constexpr int kMaxDepth = 60;

double simpson(double a, double fa, double b, double fb, double fm) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

template <class F>
double adaptive_simpson(F& f, double a, double fa, double b, double fb, double m, double fm, double whole, double tol,
                        int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(F f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  return adaptive_simpson(f, a, fa, b, fb, m, fm, simpson(a, fa, b, fb, fm), tol, kMaxDepth);
}

}  // namespace

SaturationSpec::SaturationSpec(double u_max_, Eigen::VectorXd R_diag_) : u_max(u_max_), R_diag(std::move(R_diag_)) {
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw ConfigError("critic.u_max: must be > 0");
  if (R_diag.size() == 0) throw ConfigError("critic.R: at least one input is required");
  for (Eigen::Index i = 0; i < R_diag.size(); ++i)
    if (!(R_diag(i) > 0.0) || !std::isfinite(R_diag(i))) throw ConfigError("critic.R: diagonal entries must be > 0");
}

Eigen::VectorXd tau(const Eigen::MatrixXd& G, const Eigen::MatrixXd& grad_theta, const Eigen::VectorXd& W,
                    const SaturationSpec& spec) {
  if (G.cols() != spec.inputs() || grad_theta.cols() != G.rows() || grad_theta.rows() != W.size())
    throw ConfigError("tau: inconsistent dimensions");
  const Eigen::VectorXd value_gradient = grad_theta.transpose() * W;  // dV/dz
  return (G.transpose() * value_gradient).cwiseQuotient(spec.R_diag) / (2.0 * spec.u_max);
}

Eigen::VectorXd control(const Eigen::VectorXd& t, const SaturationSpec& spec) {
  return -spec.u_max * t.array().tanh().matrix();
}

double log_sech2(double x) {
  const double a = std::abs(x);
  if (a < 1.0) {
    const double th = std::tanh(a);
    return std::log1p(-th * th);
  }
  // log sech^2 a = -2 (a + log(1 + e^{-2a}) - log 2)
  return -2.0 * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
}

double utility_closed(const Eigen::VectorXd& t, const SaturationSpec& spec) {
  if (t.size() != spec.inputs()) throw ConfigError("utility_closed: tau has wrong dimension");
  const double um2 = spec.u_max * spec.u_max;
  double total = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    total += spec.R_diag(i) * (2.0 * um2 * t(i) * std::tanh(t(i)) + um2 * log_sech2(t(i)));
  return total;
}

double utility_quadrature(const Eigen::VectorXd& u, const SaturationSpec& spec) {
  if (u.size() != spec.inputs()) throw ConfigError("utility_quadrature: u has wrong dimension");
  const double um = spec.u_max;
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(std::abs(u(i)) < um)) throw DomainError("utility_quadrature: |u_i| must be < u_max");
    const double ri = spec.R_diag(i);
    total += integrate([um, ri](double v) { return 2.0 * um * ri * std::atanh(v / um); }, 0.0, u(i), kQuadratureTol);
  }
  return total;
}

double q_cost(const Eigen::VectorXd& z, const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() > z.size()) throw ConfigError("q_cost: Q does not fit the error block of z");
  const Eigen::VectorXd e = z.head(Q.rows());
  return e.dot(Q * e);
}

TanhDiffBound tanh_diff_bound(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ConfigError("tanh_diff_bound: size mismatch");
  double lhs2 = 0.0;
  double bound2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = std::tanh(a(i)) - std::tanh(b(i));
    lhs2 += d * d;
    const double gap = a(i) - b(i);
    bound2 += std::min(gap * gap, 4.0);
  }
  return {std::sqrt(lhs2), std::sqrt(bound2)};
}

}  // namespace irltrack
