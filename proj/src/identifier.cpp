#include "irltrack/identifier.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "irltrack/errors.hpp"
#include "irltrack/jacobi.hpp"

namespace irltrack {

IdentifierBasis::IdentifierBasis(std::string id, int state_dim, int input_dim, int drift_dim, int control_dim,
                                 DriftFn drift, ControlFn control)
    : id_(std::move(id)),
      n_(state_dim),
      m_(input_dim),
      kw1_(drift_dim),
      kw2_(control_dim),
      drift_(std::move(drift)),
      control_(std::move(control)) {
  if (n_ <= 0 || m_ <= 0 || kw1_ < 0 || kw2_ <= 0) throw ConfigError("identifier basis: invalid dimensions");
}

IdentifierBasis IdentifierBasis::spring_damper_cubic() {
  return IdentifierBasis(
      "spring_damper_cubic", 2, 1, 3, 1,
      [](const Eigen::VectorXd& x) {
        Eigen::VectorXd xi(3);
        xi << x(0), x(1), x(0) * x(0) * x(0);
        return xi;
      },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 1); });
}

IdentifierBasis IdentifierBasis::from_id(const std::string& id) {
  if (id == "spring_damper_cubic") return spring_damper_cubic();
  throw ConfigError("identifier.basis: unknown basis '" + id + "'");
}

Eigen::VectorXd IdentifierBasis::drift(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw ConfigError("identifier basis: state has wrong dimension");
  Eigen::VectorXd xi = drift_(x);
  if (xi.size() != kw1_) throw ConfigError("identifier basis: drift regressor has wrong dimension");
  return xi;
}

Eigen::MatrixXd IdentifierBasis::control(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw ConfigError("identifier basis: state has wrong dimension");
  Eigen::MatrixXd xi = control_(x);
  if (xi.rows() != kw2_ || xi.cols() != m_) throw ConfigError("identifier basis: control regressor has wrong shape");
  return xi;
}

IdentifierState IdentifierState::zero(const IdentifierBasis& basis, const Eigen::MatrixXd& w_init) {
  const int p = basis.regressor_dim();
  const int n = basis.state_dim();
  IdentifierState s;
  if (w_init.size() == 0) {
    s.W_hat = Eigen::MatrixXd::Zero(p, n);
  } else {
    if (w_init.rows() != p || w_init.cols() != n)
      throw ConfigError("identifier.W_init: expected " + std::to_string(p) + "x" + std::to_string(n));
    s.W_hat = w_init;
  }
  s.phi_f = Eigen::VectorXd::Zero(p);
  s.x_f = Eigen::VectorXd::Zero(n);
  s.Pi = Eigen::MatrixXd::Zero(p, p);
  s.K = Eigen::MatrixXd::Zero(p, n);
  return s;
}

ReplayStack::ReplayStack(std::size_t capacity, double snapshot_period, int regressor_dim, int state_dim)
    : capacity_(capacity),
      period_(snapshot_period),
      next_due_(snapshot_period),
      Pi_sum_(Eigen::MatrixXd::Zero(regressor_dim, regressor_dim)),
      K_sum_(Eigen::MatrixXd::Zero(regressor_dim, state_dim)) {
  if (capacity_ == 0) throw ConfigError("identifier.stack_size: must be >= 1");
  if (!(period_ > 0.0)) throw ConfigError("identifier.snapshot_period: must be > 0");
  snapshots_.reserve(capacity_);
}

double ReplayStack::sum_min_eig() const { return snapshots_.empty() ? 0.0 : min_eig_sym(Pi_sum_); }

bool ReplayStack::due(double t) const noexcept { return t >= next_due_ - 1e-9 * std::max(1.0, std::abs(t)); }

void ReplayStack::push(Snapshot s) {
  if (full()) throw ConfigError("replay stack: push on a full stack");
  Pi_sum_ += s.Pi;
  K_sum_ += s.K;
  snapshots_.push_back(std::move(s));
}

void ReplayStack::replace(std::size_t j, Snapshot s) {
  snapshots_.at(j) = std::move(s);
  // Re-sum rather than add/subtract so rounding does not drift over many swaps.
  Pi_sum_.setZero();
  K_sum_.setZero();
  for (const auto& snap : snapshots_) {
    Pi_sum_ += snap.Pi;
    K_sum_ += snap.K;
  }
}

Eigen::VectorXd regressor(const IdentifierBasis& basis, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (u.size() != basis.input_dim()) throw ConfigError("regressor: control has wrong dimension");
  Eigen::VectorXd phi(basis.regressor_dim());
  phi.head(basis.drift_dim()) = basis.drift(x);
  phi.tail(basis.control_dim()) = basis.control(x) * u;
  return phi;
}

FilterRates filter_derivatives(const Eigen::VectorXd& phi, const Eigen::VectorXd& x, const Eigen::VectorXd& phi_f,
                               const Eigen::VectorXd& x_f, double k_f) {
  if (!(k_f > 0.0)) throw ConfigError("identifier.k_f: filter constant must be > 0");
  return {(phi - phi_f) / k_f, (x - x_f) / k_f};
}

GramRates gram_derivatives(const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& K, const Eigen::VectorXd& phi_f,
                           const Eigen::VectorXd& x_f_dot, double l_f) {
  return {-l_f * Pi + phi_f * phi_f.transpose(), -l_f * K + phi_f * x_f_dot.transpose()};
}

Eigen::MatrixXd m1(const IdentifierState& s) { return s.Pi * s.W_hat - s.K; }

Eigen::MatrixXd update_derivative(const IdentifierState& s, const ReplayStack* stack, const Eigen::MatrixXd& gamma1) {
  Eigen::MatrixXd drive = m1(s);
  // Summed per snapshot rather than through Pi_sum/K_sum so that each
  // Pi_j W - K_j cancels exactly at the ideal weights.
  if (stack != nullptr)
    for (const auto& snap : stack->snapshots()) drive += snap.Pi * s.W_hat - snap.K;
  return -gamma1 * drive;
}

bool maybe_record(ReplayStack& stack, const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& K, double t) {
  if (!stack.due(t)) return false;
  while (stack.due(t)) stack.next_due_ += stack.period_;

  if (!stack.full()) {
    stack.push({Pi, K, t});
    return true;
  }

  const double current = min_eig_sym(stack.Pi_sum_);
  double best = current;
  std::size_t best_slot = stack.snapshots_.size();
  for (std::size_t j = 0; j < stack.snapshots_.size(); ++j) {
    const double candidate = min_eig_sym(stack.Pi_sum_ - stack.snapshots_[j].Pi + Pi);
    if (candidate > best) {
      best = candidate;
      best_slot = j;
    }
  }
  if (best_slot == stack.snapshots_.size()) return false;
  stack.replace(best_slot, {Pi, K, t});
  return true;
}

Estimates estimates(const IdentifierState& s, const IdentifierBasis& basis, const Eigen::VectorXd& x) {
  const int kw1 = basis.drift_dim();
  const int kw2 = basis.control_dim();
  Estimates e;
  e.f_hat = s.W_hat.topRows(kw1).transpose() * basis.drift(x);
  e.g_hat = s.W_hat.bottomRows(kw2).transpose() * basis.control(x);
  return e;
}

}  // namespace irltrack
