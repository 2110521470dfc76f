#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "irltrack/errors.hpp"
#include "irltrack/policy.hpp"

using namespace irltrack;

namespace {

SaturationSpec spec1(double um = 2.0, double r = 1.0) { return SaturationSpec(um, Eigen::VectorXd::Constant(1, r)); }

// Antiderivative of 2 a r atanh(v / a): 2 a r [v atanh(v / a) + (a / 2) log(1 - v^2 / a^2)].
double utility_exact(const Eigen::VectorXd& u, double a, const Eigen::VectorXd& r) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double v = u(i);
    acc += 2.0 * a * r(i) * (v * std::atanh(v / a) + 0.5 * a * std::log1p(-(v / a) * (v / a)));
  }
  return acc;
}

}  // namespace

TEST_CASE("saturation spec validation") {
  CHECK_THROWS_AS(SaturationSpec(0.0, Eigen::VectorXd::Ones(1)), ConfigError);
  CHECK_THROWS_AS(SaturationSpec(2.0, Eigen::VectorXd::Zero(1)), ConfigError);
  CHECK_THROWS_AS(SaturationSpec(2.0, Eigen::VectorXd()), ConfigError);
}

TEST_CASE("tau") {
  const auto s = spec1();
  const Eigen::MatrixXd G = Eigen::Vector2d(1, 0);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(3, 2);
  grad(0, 0) = 1;
  CHECK(tau(G, grad, Eigen::Vector3d::Zero(), s).isZero(0));
  CHECK(tau(Eigen::MatrixXd::Zero(2, 1), grad, Eigen::Vector3d(1, 2, 3), s).isZero(0));
  CHECK(tau(G, grad, Eigen::Vector3d(4, 0, 0), s)(0) == doctest::Approx(1.0).epsilon(1e-15));
  const SaturationSpec r2(2.0, Eigen::VectorXd::Constant(1, 2.0));
  CHECK(tau(G, grad, Eigen::Vector3d(4, 0, 0), r2)(0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("control") {
  const auto s = spec1();
  CHECK(control(Eigen::VectorXd::Zero(1), s)(0) == 0.0);
  CHECK(control(Eigen::VectorXd::Constant(1, 1.0), s)(0) == doctest::Approx(-1.5232).epsilon(1e-4));
  CHECK(control(Eigen::VectorXd::Constant(1, 1.0), s)(0) == doctest::Approx(-2.0 * std::tanh(1.0)).epsilon(1e-15));
  CHECK(control(Eigen::VectorXd::Constant(1, 40.0), s)(0) == doctest::Approx(-2.0));
}

TEST_CASE("control is odd and strictly saturated") {
  gen::Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    const int m = rng.integer(1, 3);
    const double um = rng.uniform(0.1, 10);
    const SaturationSpec s(um, rng.vec(m, 0.1, 5));
    // tanh rounds to exactly 1 beyond |tau| ~ 19.06 in double precision.
    const Eigen::VectorXd t = rng.vec(m, -18, 18);
    const Eigen::VectorXd a = control(t, s), b = control(-t, s);
    CHECK((a + b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.cwiseAbs().maxCoeff() < um);
    const Eigen::VectorXd wide = Eigen::VectorXd::Constant(m, rng.wide());
    CHECK(control(wide, s).cwiseAbs().maxCoeff() <= um);
  }
}

TEST_CASE("closed-form utility") {
  const auto s = spec1();
  CHECK(utility_closed(Eigen::VectorXd::Zero(1), s) == 0.0);
  const double v = utility_closed(Eigen::VectorXd::Constant(1, 1.0), s);
  CHECK(v == doctest::Approx(2.6227).epsilon(1e-4));
  const double th = std::tanh(1.0);
  CHECK(v == doctest::Approx(8.0 * th + 4.0 * std::log(1.0 - th * th)).epsilon(1e-13));
  CHECK(utility_closed(Eigen::VectorXd::Constant(1, -1.0), s) == doctest::Approx(v).epsilon(1e-15));
  CHECK(utility_quadrature(control(Eigen::VectorXd::Constant(1, 1.0), s), s) == doctest::Approx(v).epsilon(1e-10));

  // Finite for arguments where 1 - tanh^2 underflows.
  const double big = utility_closed(Eigen::VectorXd::Constant(1, 400.0), s);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(8.0 * 400.0 - 8.0 * (400.0 - std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("quadrature utility") {
  const auto s = spec1();
  CHECK(utility_quadrature(Eigen::VectorXd::Zero(1), s) == 0.0);
  CHECK_THROWS_AS(utility_quadrature(Eigen::VectorXd::Constant(1, 2.0), s), DomainError);
  CHECK_THROWS_AS(utility_quadrature(Eigen::VectorXd::Constant(1, -2.5), s), DomainError);

  gen::Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    const int m = rng.integer(1, 3);
    const double um = rng.uniform(0.5, 4);
    const Eigen::VectorXd r = rng.vec(m, 0.1, 3);
    const SaturationSpec sp(um, r);
    const Eigen::VectorXd u = rng.vec(m, -0.999 * um, 0.999 * um);
    const double q = utility_quadrature(u, sp);
    CHECK(q >= 0.0);
    CHECK(q == doctest::Approx(utility_exact(u, um, r)).epsilon(1e-8).scale(1e-6));
  }
}

TEST_CASE("closed form agrees with the analytic integral") {
  gen::Rng rng(43);
  for (int i = 0; i < 10000; ++i) {
    const int m = rng.integer(1, 3);
    const double um = rng.uniform(0.5, 4);
    const Eigen::VectorXd r = rng.vec(m, 0.1, 3);
    const SaturationSpec sp(um, r);
    const Eigen::VectorXd t = rng.vec(m, -3, 3);
    const double c = utility_closed(t, sp);
    CHECK(c >= 0.0);
    CHECK(c == doctest::Approx(utility_exact(control(t, sp), um, r)).epsilon(1e-9).scale(1e-7));
    CHECK(utility_closed(-t, sp) == doctest::Approx(c).epsilon(1e-14));
  }
}

TEST_CASE("q cost") {
  const Eigen::MatrixXd q10 = Eigen::MatrixXd::Constant(1, 1, 10.0);
  CHECK(q_cost(Eigen::Vector2d(0, 7), q10) == 0.0);
  CHECK(q_cost(Eigen::Vector2d(0.5, 3), q10) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(q_cost(Eigen::Vector2d(-2, 3), Eigen::MatrixXd::Ones(1, 1)) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("tanh difference bound") {
  auto r = tanh_diff_bound(Eigen::Vector2d(0.3, -1), Eigen::Vector2d(0.3, -1));
  CHECK(r.lhs == 0.0);
  CHECK(r.lhs <= r.bound);
  r = tanh_diff_bound(Eigen::VectorXd::Constant(1, 10), Eigen::VectorXd::Constant(1, -10));
  CHECK(r.lhs == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(r.bound == 2.0);
  CHECK(r.lhs <= r.bound);

  gen::Rng rng(44);
  for (int i = 0; i < 10000; ++i) {
    const int m = rng.integer(1, 3);
    Eigen::VectorXd a(m), b(m);
    for (int j = 0; j < m; ++j) {
      a(j) = rng.integer(0, 3) ? rng.uniform(-4, 4) : rng.wide();
      b(j) = rng.integer(0, 3) ? rng.uniform(-4, 4) : rng.wide();
    }
    const auto t = tanh_diff_bound(a, b);
    CHECK(t.lhs <= t.bound);
    CHECK(t.bound <= 2.0 * std::sqrt(static_cast<double>(m)));
  }
}

TEST_CASE("log sech^2") {
  for (double x : {0.0, 0.1, -0.7, 1.0, 3.0, -8.0}) {
    CHECK(log_sech2(x) == doctest::Approx(-2.0 * std::log(std::cosh(x))).epsilon(1e-13).scale(1e-15));
  }
  CHECK(log_sech2(1000.0) == doctest::Approx(-2.0 * (1000.0 - std::log(2.0))).epsilon(1e-15));
  CHECK(std::isfinite(log_sech2(-1e300)));
}
