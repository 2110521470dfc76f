#pragma once

// Fixed-step closed-loop simulation: the true plant, the identifier filters
// and Gram integrals advance by RK4 with the control held over each step;
// identifier and critic weights advance by forward Euler from derivatives
// evaluated at the start of the step.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "irltrack/critic.hpp"
#include "irltrack/identifier.hpp"
#include "irltrack/models.hpp"
#include "irltrack/policy.hpp"

namespace irltrack {

struct ProbeConfig {
  bool enabled = false;
  double amplitude = 0.2;                       // N, bound on |probe|
  std::vector<double> frequencies{1.1, 2.3, 3.7};  // Hz
  double noise = 0.0;                           // std-dev of white noise added before limiting, N

  bool operator==(const ProbeConfig&) const = default;
};

struct IdentifierConfig {
  std::string basis = "spring_damper_cubic";
  double k_f = 0.005;             // filter time constant, s
  double l_f = 1.0;               // forgetting rate, 1/s
  Eigen::MatrixXd gamma1;         // learning-rate matrix; empty means 10 I
  std::size_t stack_size = 10;
  double snapshot_period = 0.5;   // s
  bool er_enabled = true;
  Eigen::MatrixXd W_init;         // empty means zero
};

struct CriticConfig {
  GainConfig gains;
  Eigen::MatrixXd Q;         // error-block state penalty
  Eigen::VectorXd R;         // diagonal control penalty
  double u_max = 2.0;
  Eigen::VectorXd W_init;    // empty means zero
  bool limit_switching = true;  // see switching_fraction
};

struct SimConfig {
  ParameterSchedule schedule = ParameterSchedule::benchmark();
  PlantState x0{};
  double x1d = 1.0;
  IdentifierConfig identifier;
  CriticConfig critic;
  double dt = 1e-3;
  double duration = 45.0;
  ProbeConfig probe;
  std::uint64_t seed = 0;

  /// Benchmark defaults with every matrix populated.
  static SimConfig defaults();
  /// Throws ConfigError on any inconsistency (gains, dimensions, T/dt and duration/dt integrality).
  void validate() const;
  std::size_t step_count() const;
};

/// One row per step. The CSV columns are a subset; the remaining fields feed
/// metrics and acceptance checks.
struct RunRow {
  long step = 0;
  double t = 0.0;
  double x1 = 0.0, x2 = 0.0, x1d = 0.0, x2d = 0.0;
  double u = 0.0;        // applied control
  double u_hat = 0.0;    // policy output before probing
  double z1 = 0.0, z2 = 0.0;
  double e_hjb = 0.0;    // 0 until the first full window
  double sigma = 0.0;
  int xi = 1;
  Eigen::VectorXd W;     // critic weights
  Eigen::MatrixXd W_id;  // identifier weights
  double g_tilde_norm = 0.0;
  double lambda_min_P = 0.0;

  bool window_ready = false;
  double phi_norm = 0.0;
  double theta_bar_norm = 0.0;
  double dtheta_identity_gap = 0.0;  // |dtheta - integral form|_inf, 0 before the window fills
  double W_dot_norm = 0.0;
  double W_id_error = 0.0;           // |W1 - W1_hat|_F against the current true parameters
  double pi_asymmetry = 0.0;
  double pi_min_eig = 0.0;
  bool snapshot_accepted = false;    // set on the row following an accepted snapshot
  double stack_min_eig = 0.0;        // lambda_min of the replay sum
};

struct SegmentMetrics {
  double start = 0.0;
  double end = 0.0;
  double tracking_error = 0.0;  // mean |x1 - x1d| over the segment's final 3 s
  double g_tilde = 0.0;         // mean |g - g_hat| over the segment's final 2 s
};

struct Metrics {
  std::size_t rows = 0;
  double max_abs_u = 0.0;
  double final_g_tilde_norm = 0.0;
  std::vector<SegmentMetrics> segments;
  double critic_settling_time = 0.0;
  double max_W_norm = 0.0;
  double W_dot_mean_first = 0.0;  // mean |W_dot| over the first 5 s
  double W_dot_mean_last = 0.0;   // mean |W_dot| over the final 5 s
  double max_phi_norm = 0.0;
  double max_theta_bar_norm = 0.0;
  std::size_t normalizer_violations = 0;
  std::size_t snapshots_accepted = 0;
  std::size_t lambda_monotonicity_violations = 0;
  double max_pi_asymmetry = 0.0;
  double min_pi_eig = 0.0;
  std::size_t pi_monitor_trips = 0;
  std::size_t indicator_violations = 0;
  double max_dtheta_identity_gap = 0.0;
  double final_W_id_error = 0.0;
  std::optional<double> W_id_converged_at;  // first t with |W1 - W1_hat|_F < 1e-2
};

/// Sum of sinusoids scaled to the configured amplitude, plus optional white
/// noise, limited to +-amplitude. Zero when disabled.
double probe_signal(double t, const ProbeConfig& cfg, double noise_sample = 0.0);

/// clip(u_hat + probe, -u_max, u_max).
double apply_probe(double u_hat, double probe, double u_max);

class Simulation {
 public:
  explicit Simulation(SimConfig cfg);

  /// Evaluates the learner at the current time, integrates to t + dt and
  /// returns the row for the start of the step. Throws NumericalFailure.
  RunRow step();
  /// Row at the current time without advancing (used for the final sample).
  RunRow observe();

  long step_index() const noexcept { return k_; }
  double time() const noexcept { return static_cast<double>(k_) * cfg_.dt; }
  const SimConfig& config() const noexcept { return cfg_; }
  const PlantState& plant() const noexcept { return x_; }
  const IdentifierState& identifier() const noexcept { return id_; }
  const CriticState& critic() const noexcept { return critic_; }
  const ReplayStack& stack() const noexcept { return stack_; }

 private:
  struct Pending {
    double u = 0.0;
    Eigen::MatrixXd W_id_dot;
    Eigen::VectorXd W_dot;
  };

  RunRow evaluate(Pending& pending);
  void advance(const Pending& pending);

  SimConfig cfg_;
  IdentifierBasis basis_;
  CriticBasis critic_basis_;
  SaturationSpec sat_;
  Eigen::MatrixXd gamma1_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};

  long k_ = 0;
  PlantState x_;
  IdentifierState id_;
  ReplayStack stack_;
  CriticState critic_;
  Eigen::VectorXd z_prev_;
  bool accepted_last_ = false;
  double last_accepted_min_eig_ = 0.0;
};

using RowSink = std::function<void(const RunRow&)>;

/// Runs the full horizon (duration/dt + 1 rows), streaming every row to
/// `sink` (may be empty) and returning the summary metrics.
Metrics run(const SimConfig& cfg, const RowSink& sink = {});

}  // namespace irltrack
