#pragma once

// Online identification of drift and control-coupling weights from filtered
// regressors, with an experience-replay memory of past Gram/cross-term
// snapshots.
//
// The plant is parameterized as x_dot = W1^T Phi(x, u) with the combined
// regressor Phi = [xi1(x); xi2(x) u]. Low-pass filtering both Phi and x gives
// x_f_dot without differentiating measurements, and the forgetting integrals
//   Pi_dot = -l Pi + Phi_f Phi_f^T,   K_dot = -l K + Phi_f x_f_dot^T
// satisfy K = Pi W1 for an exact basis, so Pi W1_hat - K measures the weight
// error directly.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace irltrack {

class IdentifierBasis {
 public:
  using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using ControlFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  IdentifierBasis(std::string id, int state_dim, int input_dim, int drift_dim, int control_dim, DriftFn drift,
                  ControlFn control);

  /// xi1 = (x1, x2, x1^3), xi2 = (1): exactly represents the spring-damper plant.
  static IdentifierBasis spring_damper_cubic();
  /// Lookup by config id. Throws ConfigError for unknown ids.
  static IdentifierBasis from_id(const std::string& id);

  const std::string& id() const noexcept { return id_; }
  int state_dim() const noexcept { return n_; }
  int input_dim() const noexcept { return m_; }
  int drift_dim() const noexcept { return kw1_; }
  int control_dim() const noexcept { return kw2_; }
  int regressor_dim() const noexcept { return kw1_ + kw2_; }

  /// xi1(x), length drift_dim. Throws ConfigError on dimension mismatch.
  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  /// xi2(x), control_dim x input_dim.
  Eigen::MatrixXd control(const Eigen::VectorXd& x) const;

 private:
  std::string id_;
  int n_, m_, kw1_, kw2_;
  DriftFn drift_;
  ControlFn control_;
};

struct IdentifierState {
  Eigen::MatrixXd W_hat;  // (kw1+kw2) x n
  Eigen::VectorXd phi_f;  // filtered regressor
  Eigen::VectorXd x_f;    // filtered state
  Eigen::MatrixXd Pi;     // Gram matrix
  Eigen::MatrixXd K;      // cross term

  /// Zero filters and Gram/cross terms, weights from w_init (zero if empty).
  static IdentifierState zero(const IdentifierBasis& basis, const Eigen::MatrixXd& w_init = {});
};

/// Experience-replay memory of (Pi_j, K_j, t_j) snapshots with running sums.
class ReplayStack {
 public:
  struct Snapshot {
    Eigen::MatrixXd Pi;
    Eigen::MatrixXd K;
    double t = 0.0;
  };

  ReplayStack(std::size_t capacity, double snapshot_period, int regressor_dim, int state_dim);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  bool full() const noexcept { return snapshots_.size() >= capacity_; }
  double snapshot_period() const noexcept { return period_; }
  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
  const Eigen::MatrixXd& Pi_sum() const noexcept { return Pi_sum_; }
  const Eigen::MatrixXd& K_sum() const noexcept { return K_sum_; }
  /// lambda_min of Pi_sum (0 for an empty stack).
  double sum_min_eig() const;

  /// True when t has reached the next snapshot instant.
  bool due(double t) const noexcept;

  /// Low-level mutators. Both keep the running sums consistent.
  void push(Snapshot s);
  void replace(std::size_t j, Snapshot s);

 private:
  friend bool maybe_record(ReplayStack&, const Eigen::MatrixXd&, const Eigen::MatrixXd&, double);

  std::size_t capacity_;
  double period_;
  double next_due_;
  std::vector<Snapshot> snapshots_;
  Eigen::MatrixXd Pi_sum_;
  Eigen::MatrixXd K_sum_;
};

/// Phi = [xi1(x); xi2(x) u]. Throws ConfigError on dimension mismatch.
Eigen::VectorXd regressor(const IdentifierBasis& basis, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

struct FilterRates {
  Eigen::VectorXd phi_f_dot;
  Eigen::VectorXd x_f_dot;
};

/// First-order lag k_f * y_dot + y = input for both Phi and x. Throws ConfigError if k_f <= 0.
FilterRates filter_derivatives(const Eigen::VectorXd& phi, const Eigen::VectorXd& x, const Eigen::VectorXd& phi_f,
                               const Eigen::VectorXd& x_f, double k_f);

struct GramRates {
  Eigen::MatrixXd Pi_dot;
  Eigen::MatrixXd K_dot;
};

GramRates gram_derivatives(const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& K, const Eigen::VectorXd& phi_f,
                           const Eigen::VectorXd& x_f_dot, double l_f);

/// M1 = Pi W_hat - K.
Eigen::MatrixXd m1(const IdentifierState& s);

/// W_hat_dot = -Gamma1 (M1 + sum_j (Pi_j W_hat - K_j)). Pass nullptr to run without replay.
Eigen::MatrixXd update_derivative(const IdentifierState& s, const ReplayStack* stack, const Eigen::MatrixXd& gamma1);

/// Snapshot policy. At every snapshot_period boundary: append while the stack
/// has room; once full, swap in the candidate in the slot that maximizes
/// lambda_min of the summed Gram matrix, but only if that strictly increases
/// it. Returns whether the candidate was stored.
bool maybe_record(ReplayStack& stack, const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& K, double t);

struct Estimates {
  Eigen::VectorXd f_hat;  // n
  Eigen::MatrixXd g_hat;  // n x m
};

/// f_hat = w1_hat xi1(x), g_hat = w2_hat xi2(x), with w1_hat/w2_hat the
/// transposed drift/control row blocks of W_hat.
Estimates estimates(const IdentifierState& s, const IdentifierBasis& basis, const Eigen::VectorXd& x);

}  // namespace irltrack
