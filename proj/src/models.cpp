#include "irltrack/models.hpp"

#include <cmath>
#include <string>

#include "irltrack/errors.hpp"

namespace irltrack {

ParameterSchedule::ParameterSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw ConfigError("schedule: at least one segment is required");
  if (segments_.front().start != 0.0) throw ConfigError("schedule: first segment must start at t=0");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.params.mass > 0.0) || !std::isfinite(s.params.mass))
      throw ConfigError("schedule[" + std::to_string(i) + "].mass: must be > 0");
    if (!std::isfinite(s.params.spring) || !std::isfinite(s.params.damping))
      throw ConfigError("schedule[" + std::to_string(i) + "]: non-finite parameter");
    if (i > 0 && !(s.start > segments_[i - 1].start))
      throw ConfigError("schedule[" + std::to_string(i) + "].start: start times must be strictly increasing");
  }
}

ParameterSchedule ParameterSchedule::benchmark() {
  return ParameterSchedule({{0.0, {1.0, 3.0, 0.5}}, {14.0, {4.5, 5.0, 0.5}}, {30.0, {8.0, 9.0, 0.5}}});
}

ParameterSchedule ParameterSchedule::constant(const PlantParams& p) { return ParameterSchedule({{0.0, p}}); }

double ParameterSchedule::segment_end(std::size_t i, double horizon) const {
  return i + 1 < segments_.size() ? segments_[i + 1].start : horizon;
}

PlantState plant_derivative(const PlantState& x, double u, const PlantParams& p) {
  if (!std::isfinite(x.x1) || !std::isfinite(x.x2) || !std::isfinite(u))
    throw NumericalFailure("plant_derivative: non-finite input");
  const double inv_m = 1.0 / p.mass;
  return {x.x2, -p.spring * inv_m * x.x1 * x.x1 * x.x1 - p.damping * inv_m * x.x2 + inv_m * u};
}

PlantParams params_at(double t, const ParameterSchedule& sched) {
  if (!(t >= 0.0)) throw DomainError("params_at: t must be >= 0");
  const auto& segs = sched.segments();
  std::size_t idx = 0;
  while (idx + 1 < segs.size() && t >= segs[idx + 1].start) ++idx;
  return segs[idx].params;
}

double reference(double x1, double x1d, double x1d_dot) { return x1d_dot - 5.0 * (x1 - x1d); }

AugmentedState augment(const PlantState& x, double x2d) { return {x.x2 - x2d, x2d}; }

Eigen::Vector2d augmented_g(const Eigen::Ref<const Eigen::VectorXd>& g_hat) {
  if (g_hat.size() != 2) throw ConfigError("augmented_g: expected one gain per plant state (2)");
  return {g_hat(1), 0.0};
}

Eigen::Vector2d true_g(const PlantParams& p) { return {0.0, 1.0 / p.mass}; }

Eigen::MatrixXd true_identifier_weights(const PlantParams& p) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 2);
  w(1, 0) = 1.0;                    // x1_dot = x2
  w(1, 1) = -p.damping / p.mass;    // x2
  w(2, 1) = -p.spring / p.mass;     // x1^3
  w(3, 1) = 1.0 / p.mass;           // u
  return w;
}

double mechanical_energy(const PlantState& x, const PlantParams& p) {
  return 0.5 * p.mass * x.x2 * x.x2 + 0.25 * p.spring * x.x1 * x.x1 * x.x1 * x.x1;
}

}  // namespace irltrack
