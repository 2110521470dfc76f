#pragma once

// True plant, reference command and tracking-error augmentation for the
// nonlinear spring-damper benchmark. Everything here is immutable value data
// and pure functions.

#include <Eigen/Dense>
#include <vector>

namespace irltrack {

struct PlantParams {
  double mass = 1.0;     // kg
  double spring = 3.0;   // N/m (cubic spring coefficient)
  double damping = 0.5;  // N*s/m

  bool operator==(const PlantParams&) const = default;
};

/// Piecewise-constant physical parameters. Segment i covers
/// [segments[i].start, segments[i+1].start), the last one is open-ended.
class ParameterSchedule {
 public:
  struct Segment {
    double start = 0.0;
    PlantParams params;

    bool operator==(const Segment&) const = default;
  };

  ParameterSchedule() = default;
  /// Throws ConfigError unless starts are strictly increasing from 0 and every mass is > 0.
  explicit ParameterSchedule(std::vector<Segment> segments);

  /// (1, 3, 0.5) for t < 14, (4.5, 5, 0.5) for 14 <= t < 30, (8, 9, 0.5) afterwards.
  static ParameterSchedule benchmark();
  static ParameterSchedule constant(const PlantParams& p);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  /// End time of segment i, or `horizon` for the last one.
  double segment_end(std::size_t i, double horizon) const;

  bool operator==(const ParameterSchedule&) const = default;

 private:
  std::vector<Segment> segments_{Segment{}};
};

struct PlantState {
  double x1 = 0.0;  // position, m
  double x2 = 0.0;  // velocity, m/s

  bool operator==(const PlantState&) const = default;
};

/// z1 = x2 - x2d (velocity tracking error), z2 = x2d.
struct AugmentedState {
  double z1 = 0.0;
  double z2 = 0.0;

  Eigen::Vector2d vec() const { return {z1, z2}; }
};

/// (x2, -(k/m) x1^3 - (c/m) x2 + u/m). Throws NumericalFailure on non-finite input.
PlantState plant_derivative(const PlantState& x, double u, const PlantParams& p);

/// Left-closed, right-open lookup. Throws DomainError for t < 0.
PlantParams params_at(double t, const ParameterSchedule& sched);

/// Kinematic velocity command x2d = x1d_dot - 5 (x1 - x1d).
double reference(double x1, double x1d, double x1d_dot = 0.0);

AugmentedState augment(const PlantState& x, double x2d);

/// Control column of the augmented system: (g_hat[1], 0). g_hat holds one
/// entry per plant state.
Eigen::Vector2d augmented_g(const Eigen::Ref<const Eigen::VectorXd>& g_hat);

/// Control coupling of the true plant, (0, 1/m).
Eigen::Vector2d true_g(const PlantParams& p);

/// Ideal identifier weights for the cubic spring-damper basis
/// (x1, x2, x1^3 | u). Rows index the regressor, columns the state derivative.
Eigen::MatrixXd true_identifier_weights(const PlantParams& p);

/// Mechanical energy 0.5 m x2^2 + (k/4) x1^4.
double mechanical_energy(const PlantState& x, const PlantParams& p);

}  // namespace irltrack
