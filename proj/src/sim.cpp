#include "irltrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irltrack/errors.hpp"
#include "irltrack/integrator.hpp"
#include "irltrack/jacobi.hpp"

namespace irltrack {
namespace {

constexpr double kTrackingWindow = 3.0;
constexpr double kGTildeWindow = 2.0;
constexpr double kSettleWindow = 5.0;
constexpr double kPhiBound = 0.5;
constexpr double kThetaBarBound = 0.325;
constexpr double kIdentifierTolerance = 1e-2;

bool integral_multiple(double value, double dt) {
  const double ratio = value / dt;
  return std::round(ratio) >= 1.0 && std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

Eigen::MatrixXd resolved_gamma1(const IdentifierConfig& cfg, int p) {
  if (cfg.gamma1.size() == 0) return 10.0 * Eigen::MatrixXd::Identity(p, p);
  return cfg.gamma1;
}

void require_finite(const RunRow& r) {
  const bool ok = std::isfinite(r.x1) && std::isfinite(r.x2) && std::isfinite(r.u) && std::isfinite(r.e_hjb) &&
                  std::isfinite(r.sigma) && r.W.allFinite() && r.W_id.allFinite() && std::isfinite(r.g_tilde_norm) &&
                  std::isfinite(r.lambda_min_P);
  if (!ok) throw NumericalFailure("non-finite value in simulation state", r.step);
}

}  // namespace

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  const int n1 = CriticBasis::spring_damper().size();
  cfg.critic.gains = GainConfig::defaults(n1);
  // Tuned for the switching benchmark; the GainConfig values let the critic
  // weights keep drifting after each parameter switch.
  cfg.critic.gains.gamma = 0.011;
  cfg.critic.gains.l = 0.42;
  cfg.critic.gains.K2 = 0.022 * Eigen::MatrixXd::Identity(n1, n1);
  cfg.critic.gains.T = 0.2;
  cfg.critic.Q = Eigen::MatrixXd::Constant(1, 1, 3.0);
  cfg.critic.R = Eigen::VectorXd::Constant(1, 0.27);
  cfg.critic.u_max = 2.0;
  cfg.critic.W_init = Eigen::VectorXd::Zero(n1);
  const auto basis = IdentifierBasis::spring_damper_cubic();
  cfg.identifier.gamma1 = 10.0 * Eigen::MatrixXd::Identity(basis.regressor_dim(), basis.regressor_dim());
  cfg.identifier.W_init = Eigen::MatrixXd::Zero(basis.regressor_dim(), basis.state_dim());
  // Initial guess for the input gain on the velocity channel; with all-zero
  // weights g_hat = 0 forces u = 0 and the input channel is never excited.
  cfg.identifier.W_init(basis.regressor_dim() - 1, 1) = 0.5;
  return cfg;
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt: must be > 0");
  if (!(duration > 0.0) || !integral_multiple(duration, dt)) throw ConfigError("sim.duration: not a multiple of dt");
  if (!integral_multiple(critic.gains.T, dt)) throw ConfigError("critic.T: T not a multiple of dt");
  if (!std::isfinite(x0.x1) || !std::isfinite(x0.x2)) throw ConfigError("plant.initial_state: must be finite");
  if (!std::isfinite(x1d)) throw ConfigError("reference.x1d: must be finite");

  const auto basis = IdentifierBasis::from_id(identifier.basis);
  const auto critic_basis = CriticBasis::spring_damper();
  const int p = basis.regressor_dim();
  if (!(identifier.k_f > 0.0)) throw ConfigError("identifier.k_f: must be > 0");
  if (!(identifier.l_f > 0.0)) throw ConfigError("identifier.l_f: must be > 0");
  const Eigen::MatrixXd g1 = resolved_gamma1(identifier, p);
  if (g1.rows() != p || g1.cols() != p) throw ConfigError("identifier.gamma1: must be " + std::to_string(p) + "x" + std::to_string(p));
  try {
    if (!(min_eig_sym(g1) > 0.0)) throw ConfigError("identifier.gamma1: must be positive definite");
  } catch (const DomainError&) {
    throw ConfigError("identifier.gamma1: must be symmetric");
  }
  if (identifier.er_enabled && identifier.stack_size < static_cast<std::size_t>(p))
    throw ConfigError("identifier.stack_size: must be >= regressor dimension (" + std::to_string(p) + ")");
  if (identifier.stack_size == 0) throw ConfigError("identifier.stack_size: must be >= 1");
  if (!(identifier.snapshot_period > 0.0)) throw ConfigError("identifier.snapshot_period: must be > 0");
  if (identifier.W_init.size() != 0 && (identifier.W_init.rows() != p || identifier.W_init.cols() != basis.state_dim()))
    throw ConfigError("identifier.W_init: must be " + std::to_string(p) + "x" + std::to_string(basis.state_dim()));

  const int n1 = critic_basis.size();
  if (critic.gains.K1.size() != n1) throw ConfigError("critic.K1: must have " + std::to_string(n1) + " entries");
  check_gains(critic.gains);
  if (critic.Q.rows() != 1 || critic.Q.cols() != 1) throw ConfigError("critic.Q: must be 1x1 for the benchmark augmentation");
  if (!(critic.Q(0, 0) >= 0.0)) throw ConfigError("critic.Q: must be positive semi-definite");
  if (critic.R.size() != basis.input_dim()) throw ConfigError("critic.R: must have one entry per input");
  SaturationSpec(critic.u_max, critic.R);
  if (critic.W_init.size() != 0 && critic.W_init.size() != n1)
    throw ConfigError("critic.W_init: must have " + std::to_string(n1) + " entries");

  if (!(probe.amplitude >= 0.0)) throw ConfigError("sim.probe.amplitude: must be >= 0");
  if (!(probe.noise >= 0.0)) throw ConfigError("sim.probe.noise: must be >= 0");
  for (double f : probe.frequencies)
    if (!(f > 0.0)) throw ConfigError("sim.probe.frequencies: must be > 0");
}

std::size_t SimConfig::step_count() const { return static_cast<std::size_t>(std::llround(duration / dt)); }

double probe_signal(double t, const ProbeConfig& cfg, double noise_sample) {
  if (!cfg.enabled || cfg.amplitude == 0.0) return 0.0;
  double s = 0.0;
  if (!cfg.frequencies.empty()) {
    for (double f : cfg.frequencies) s += std::sin(2.0 * std::numbers::pi * f * t);
    s *= cfg.amplitude / static_cast<double>(cfg.frequencies.size());
  }
  s += cfg.noise * noise_sample;
  return std::clamp(s, -cfg.amplitude, cfg.amplitude);
}

double apply_probe(double u_hat, double probe, double u_max) { return std::clamp(u_hat + probe, -u_max, u_max); }

Simulation::Simulation(SimConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      basis_(IdentifierBasis::from_id(cfg_.identifier.basis)),
      critic_basis_(CriticBasis::spring_damper()),
      sat_(cfg_.critic.u_max, cfg_.critic.R),
      gamma1_(resolved_gamma1(cfg_.identifier, basis_.regressor_dim())),
      rng_(cfg_.seed),
      x_(cfg_.x0),
      id_(IdentifierState::zero(basis_, cfg_.identifier.W_init)),
      stack_(cfg_.identifier.stack_size, cfg_.identifier.snapshot_period, basis_.regressor_dim(), basis_.state_dim()),
      critic_{cfg_.critic.W_init.size() ? cfg_.critic.W_init : Eigen::VectorXd::Zero(critic_basis_.size()),
              CriticWindow(cfg_.critic.gains.T, cfg_.dt)} {
  // x_f starts at the measured state so the filtered identity holds from t = 0.
  id_.x_f = Eigen::Vector2d(x_.x1, x_.x2);
}

RunRow Simulation::evaluate(Pending& pending) {
  const double t = time();
  const PlantParams truth = params_at(t, cfg_.schedule);
  const auto& gains = cfg_.critic.gains;

  const Eigen::Vector2d xv(x_.x1, x_.x2);
  const Estimates est = estimates(id_, basis_, xv);
  const Eigen::MatrixXd G = augmented_g(est.g_hat.col(0));

  const double x2d = reference(x_.x1, cfg_.x1d, 0.0);
  const Eigen::VectorXd z = augment(x_, x2d).vec();
  const Eigen::VectorXd theta = critic_basis_.theta(z);
  const Eigen::MatrixXd grad = critic_basis_.grad_theta(z);
  const Eigen::VectorXd& W = critic_.W_hat;

  const Eigen::VectorXd tau2 = tau(G, grad, W, sat_);
  const Eigen::VectorXd u_hat = control(tau2, sat_);
  double u = u_hat(0);
  if (cfg_.probe.enabled) {
    const double noise = cfg_.probe.noise > 0.0 ? noise_(rng_) : 0.0;
    u = apply_probe(u_hat(0), probe_signal(t, cfg_.probe, noise), sat_.u_max);
  }

  Eigen::VectorXd z_dot = Eigen::VectorXd::Zero(z.size());
  Eigen::VectorXd theta_rate_mid = Eigen::VectorXd::Zero(theta.size());
  if (k_ > 0) {
    z_dot = (z - z_prev_) / cfg_.dt;
    theta_rate_mid = critic_basis_.grad_theta(0.5 * (z + z_prev_)) * z_dot;
  }
  z_prev_ = z;

  WindowSample sample;
  sample.t = t;
  sample.z = z;
  sample.theta = theta;
  sample.grad_theta = grad;
  sample.z_dot = z_dot;
  sample.theta_rate_mid = theta_rate_mid;
  sample.u_hat = u_hat;
  sample.integrand = window_integrand(z, tau2, cfg_.critic.Q, sat_);
  sample.m = m_vector(grad, G, tau2, sat_.u_max);
  critic_.window.push(std::move(sample));

  RunRow row;
  row.step = k_;
  row.t = t;
  row.x1 = x_.x1;
  row.x2 = x_.x2;
  row.x1d = cfg_.x1d;
  row.x2d = x2d;
  row.u = u;
  row.u_hat = u_hat(0);
  row.z1 = z(0);
  row.z2 = z(1);

  const SigmaIndicator si = sigma_and_indicator(W, grad, z_dot);
  row.sigma = si.sigma;
  row.xi = si.xi;

  pending.W_dot = Eigen::VectorXd::Zero(W.size());
  if (auto e = hjb_error(critic_, gains.gamma, gains.T)) {
    const Eigen::VectorXd dtheta = window_delta_theta(critic_.window, gains.gamma, gains.T);
    const Normalizers nz = normalizers(dtheta);
    const Eigen::VectorXd stab = stabilizing_term(W, grad, G, z_dot, sat_);
    const double m_integral =
        W.dot(critic_.window.discounted_integral<Eigen::VectorXd>(
            gains.gamma, [](const WindowSample& s) -> Eigen::VectorXd { return s.m; }));
    pending.W_dot = critic_update_derivative(W, *e, dtheta, si.xi, stab, m_integral, gains);
    if (si.xi == 1 && cfg_.critic.limit_switching) {
      const Eigen::VectorXd base = critic_update_derivative(W, *e, dtheta, 0, stab, m_integral, gains);
      const Eigen::VectorXd switched = pending.W_dot - base;
      const double frac = switching_fraction(si.sigma, grad * z_dot, base, switched, cfg_.dt);
      pending.W_dot = base + frac * switched;
    }

    row.window_ready = true;
    row.e_hjb = *e;
    row.phi_norm = nz.phi.norm();
    row.theta_bar_norm = nz.theta_bar.norm();
    row.dtheta_identity_gap = (dtheta - delta_theta_quadrature(critic_.window, gains.gamma)).cwiseAbs().maxCoeff();
  }
  row.W_dot_norm = pending.W_dot.norm();

  const ReplayStack* replay = cfg_.identifier.er_enabled ? &stack_ : nullptr;
  pending.W_id_dot = update_derivative(id_, replay, gamma1_);
  pending.u = u;

  row.W = W;
  row.W_id = id_.W_hat;
  row.g_tilde_norm = (true_g(truth) - est.g_hat.col(0)).norm();
  const Eigen::MatrixXd P = replay && stack_.size() ? Eigen::MatrixXd(id_.Pi + stack_.Pi_sum()) : id_.Pi;
  row.lambda_min_P = min_eig_sym(P);
  row.W_id_error = (true_identifier_weights(truth) - id_.W_hat).norm();
  row.pi_asymmetry = (id_.Pi - id_.Pi.transpose()).cwiseAbs().maxCoeff();
  row.pi_min_eig = min_eig_sym(id_.Pi);
  row.snapshot_accepted = accepted_last_;
  row.stack_min_eig = stack_.sum_min_eig();

  require_finite(row);
  return row;
}

void Simulation::advance(const Pending& pending) {
  const double t = time();
  const PlantParams truth = params_at(t, cfg_.schedule);
  const int n = basis_.state_dim();
  const int p = basis_.regressor_dim();
  const double k_f = cfg_.identifier.k_f;
  const double l_f = cfg_.identifier.l_f;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, pending.u);

  // Layout: x | x_f | phi_f | Pi (column-major) | K (column-major)
  const int off_xf = 2, off_phif = off_xf + n, off_pi = off_phif + p, off_k = off_pi + p * p;
  Eigen::VectorXd y(off_k + p * n);
  y.segment(0, 2) << x_.x1, x_.x2;
  y.segment(off_xf, n) = id_.x_f;
  y.segment(off_phif, p) = id_.phi_f;
  y.segment(off_pi, p * p) = Eigen::Map<const Eigen::VectorXd>(id_.Pi.data(), p * p);
  y.segment(off_k, p * n) = Eigen::Map<const Eigen::VectorXd>(id_.K.data(), p * n);

  auto rhs = [&](double, const Eigen::VectorXd& s) {
    Eigen::VectorXd d(s.size());
    const PlantState xs{s(0), s(1)};
    const PlantState xd = plant_derivative(xs, u(0), truth);
    d(0) = xd.x1;
    d(1) = xd.x2;
    const Eigen::VectorXd xv = s.segment(0, 2);
    const Eigen::VectorXd x_f = s.segment(off_xf, n);
    const Eigen::VectorXd phi_f = s.segment(off_phif, p);
    const FilterRates fr = filter_derivatives(regressor(basis_, xv, u), xv, phi_f, x_f, k_f);
    const Eigen::Map<const Eigen::MatrixXd> Pi(s.data() + off_pi, p, p);
    const Eigen::Map<const Eigen::MatrixXd> K(s.data() + off_k, p, n);
    const GramRates gr = gram_derivatives(Pi, K, phi_f, fr.x_f_dot, l_f);
    d.segment(off_xf, n) = fr.x_f_dot;
    d.segment(off_phif, p) = fr.phi_f_dot;
    d.segment(off_pi, p * p) = Eigen::Map<const Eigen::VectorXd>(gr.Pi_dot.data(), p * p);
    d.segment(off_k, p * n) = Eigen::Map<const Eigen::VectorXd>(gr.K_dot.data(), p * n);
    return d;
  };

  const Eigen::VectorXd next = rk4_step(rhs, t, y, cfg_.dt);
  if (!next.allFinite()) throw NumericalFailure("non-finite state after integration", k_);

  x_ = {next(0), next(1)};
  id_.x_f = next.segment(off_xf, n);
  id_.phi_f = next.segment(off_phif, p);
  id_.Pi = Eigen::Map<const Eigen::MatrixXd>(next.data() + off_pi, p, p);
  id_.K = Eigen::Map<const Eigen::MatrixXd>(next.data() + off_k, p, n);
  id_.W_hat += cfg_.dt * pending.W_id_dot;
  critic_.W_hat += cfg_.dt * pending.W_dot;
}

RunRow Simulation::step() {
  Pending pending;
  RunRow row;
  try {
    row = evaluate(pending);
    advance(pending);
  } catch (const NumericalFailure& e) {
    if (e.step() >= 0) throw;
    throw NumericalFailure(e.what(), k_);
  }
  ++k_;
  accepted_last_ = cfg_.identifier.er_enabled && maybe_record(stack_, id_.Pi, id_.K, time());
  return row;
}

RunRow Simulation::observe() {
  Pending pending;
  return evaluate(pending);
}

Metrics run(const SimConfig& cfg, const RowSink& sink) {
  Simulation sim(cfg);
  const std::size_t steps = cfg.step_count();

  struct Trace {
    double t, x1, g_tilde, W_dot_norm;
  };
  std::vector<Trace> trace;
  std::vector<Eigen::VectorXd> W_hist;
  trace.reserve(steps + 1);
  W_hist.reserve(steps + 1);

  Metrics m;
  m.min_pi_eig = std::numeric_limits<double>::infinity();
  double last_accepted = -std::numeric_limits<double>::infinity();

  auto consume = [&](const RunRow& r) {
    if (sink) sink(r);
    trace.push_back({r.t, r.x1, r.g_tilde_norm, r.W_dot_norm});
    W_hist.push_back(r.W);
    m.max_abs_u = std::max(m.max_abs_u, std::abs(r.u));
    m.max_W_norm = std::max(m.max_W_norm, r.W.norm());
    m.max_phi_norm = std::max(m.max_phi_norm, r.phi_norm);
    m.max_theta_bar_norm = std::max(m.max_theta_bar_norm, r.theta_bar_norm);
    if (r.phi_norm > kPhiBound || r.theta_bar_norm > kThetaBarBound) ++m.normalizer_violations;
    if ((r.sigma < 0.0) != (r.xi == 0)) ++m.indicator_violations;
    m.max_pi_asymmetry = std::max(m.max_pi_asymmetry, r.pi_asymmetry);
    m.min_pi_eig = std::min(m.min_pi_eig, r.pi_min_eig);
    if (r.pi_asymmetry > 1e-12 || r.pi_min_eig < -1e-9) ++m.pi_monitor_trips;
    m.max_dtheta_identity_gap = std::max(m.max_dtheta_identity_gap, r.dtheta_identity_gap);
    if (r.snapshot_accepted) {
      ++m.snapshots_accepted;
      if (r.stack_min_eig < last_accepted - 1e-12 * std::max(1.0, std::abs(last_accepted)))
        ++m.lambda_monotonicity_violations;
      last_accepted = r.stack_min_eig;
    }
    if (!m.W_id_converged_at && r.W_id_error < kIdentifierTolerance) m.W_id_converged_at = r.t;
    m.final_W_id_error = r.W_id_error;
    m.final_g_tilde_norm = r.g_tilde_norm;
  };

  for (std::size_t k = 0; k < steps; ++k) consume(sim.step());
  consume(sim.observe());
  m.rows = trace.size();

  auto mean_over = [&](double from, double to, auto field) {
    double s = 0.0;
    std::size_t c = 0;
    for (const auto& tr : trace) {
      if (tr.t >= from - 1e-9 && tr.t < to - 1e-9) {
        s += field(tr);
        ++c;
      }
    }
    return c ? s / static_cast<double>(c) : 0.0;
  };

  const double horizon = cfg.duration;
  const auto& segs = cfg.schedule.segments();
  for (std::size_t i = 0; i < segs.size() && segs[i].start < horizon; ++i) {
    SegmentMetrics sm;
    sm.start = segs[i].start;
    // The last segment includes the final sample at t = duration.
    sm.end = std::min(cfg.schedule.segment_end(i, horizon), horizon);
    const double end_excl = (sm.end >= horizon) ? horizon + cfg.dt : sm.end;
    const double x1d = cfg.x1d;
    sm.tracking_error = mean_over(std::max(sm.start, sm.end - kTrackingWindow), end_excl,
                                  [x1d](const Trace& tr) { return std::abs(tr.x1 - x1d); });
    sm.g_tilde = mean_over(std::max(sm.start, sm.end - kGTildeWindow), end_excl,
                           [](const Trace& tr) { return tr.g_tilde; });
    m.segments.push_back(sm);
  }

  m.W_dot_mean_first = mean_over(0.0, kSettleWindow, [](const Trace& tr) { return tr.W_dot_norm; });
  m.W_dot_mean_last =
      mean_over(horizon - kSettleWindow, horizon + cfg.dt, [](const Trace& tr) { return tr.W_dot_norm; });

  // Earliest time after which W stays within 5% of its final value.
  const Eigen::VectorXd& W_final = W_hist.back();
  const double band = 0.05 * std::max(W_final.norm(), 1e-12);
  m.critic_settling_time = 0.0;
  for (std::size_t k = W_hist.size(); k-- > 0;) {
    if ((W_hist[k] - W_final).norm() > band) {
      m.critic_settling_time = trace[std::min(k + 1, trace.size() - 1)].t;
      break;
    }
  }
  return m;
}

}  // namespace irltrack
