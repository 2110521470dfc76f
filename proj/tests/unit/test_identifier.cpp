#include <doctest.h>

#include "gen.hpp"
#include "irltrack/errors.hpp"
#include "irltrack/identifier.hpp"
#include "irltrack/integrator.hpp"
#include "irltrack/jacobi.hpp"
#include "irltrack/models.hpp"

using namespace irltrack;

namespace {

Eigen::VectorXd u1(double u) { return Eigen::VectorXd::Constant(1, u); }

// Sum of the stored snapshots, recomputed from scratch.
Eigen::MatrixXd pi_sum_of(const ReplayStack& s, int p) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (const auto& snap : s.snapshots()) acc += snap.Pi;
  return acc;
}

}  // namespace

TEST_CASE("regressor") {
  const auto b = IdentifierBasis::spring_damper_cubic();
  CHECK(regressor(b, Eigen::Vector2d(2, 1), u1(0.5)) == Eigen::Vector4d(2, 1, 8, 0.5));
  CHECK(regressor(b, Eigen::Vector2d(0, 0), u1(0)) == Eigen::Vector4d::Zero());
  CHECK(regressor(b, Eigen::Vector2d(1, -1), u1(2)) == Eigen::Vector4d(1, -1, 1, 2));
  CHECK_THROWS_AS(regressor(b, Eigen::Vector3d(1, 1, 1), u1(0)), ConfigError);
  CHECK_THROWS_AS(regressor(b, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)), ConfigError);
  CHECK_THROWS_AS(IdentifierBasis::from_id("quadratic"), ConfigError);
}

TEST_CASE("filter derivatives") {
  const Eigen::Vector4d phi(1, 2, 3, 4);
  auto r = filter_derivatives(phi, Eigen::Vector2d(1, 0), phi, Eigen::Vector2d(0, 0), 0.01);
  CHECK(r.phi_f_dot.isZero(0));
  CHECK(r.x_f_dot.isApprox(Eigen::Vector2d(100, 0), 1e-14));
  CHECK_THROWS_AS(filter_derivatives(phi, Eigen::Vector2d(1, 0), phi, Eigen::Vector2d(0, 0), 0.0), ConfigError);

  // Held input: the lag closes exponentially with time constant k_f.
  const double k_f = 0.005;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  auto f = [&](double, const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return filter_derivatives(phi, Eigen::Vector2d::Zero(), s, Eigen::Vector2d::Zero(), k_f).phi_f_dot;
  };
  const double h = 1e-4;
  for (int k = 0; k < 100; ++k) y = rk4_step(f, k * h, y, h);
  const Eigen::VectorXd expect = (1.0 - std::exp(-100 * h / k_f)) * phi;
  CHECK((y - expect).norm() < 1e-8);
}

TEST_CASE("gram derivatives") {
  gen::Rng rng(31);
  const Eigen::MatrixXd pi = rng.spd(4, 0.1, 2);
  const Eigen::MatrixXd k = Eigen::MatrixXd::Random(4, 2);
  auto r = gram_derivatives(pi, k, Eigen::VectorXd::Zero(4), Eigen::Vector2d(1, 1), 0.7);
  CHECK(r.Pi_dot.isApprox(-0.7 * pi, 1e-15));
  CHECK(r.K_dot.isApprox(-0.7 * k, 1e-15));

  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd phi = rng.vec(4, -3, 3);
    const Eigen::MatrixXd s = rng.spd(4, 0, 5);
    const auto d = gram_derivatives(s, Eigen::MatrixXd::Zero(4, 2), phi, rng.vec(2, -1, 1), rng.uniform(0.1, 2));
    CHECK((d.Pi_dot - d.Pi_dot.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Gram integral matches its closed form under a held regressor") {
  gen::Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd phi0 = rng.vec(4, -2, 2);
    const double l = rng.uniform(0.2, 3);
    const int p = 4;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p * p);
    auto f = [&](double, const Eigen::VectorXd& s) -> Eigen::VectorXd {
      const Eigen::Map<const Eigen::MatrixXd> pi(s.data(), p, p);
      const auto d = gram_derivatives(pi, Eigen::MatrixXd::Zero(p, 1), phi0, Eigen::VectorXd::Zero(1), l);
      return Eigen::Map<const Eigen::VectorXd>(d.Pi_dot.data(), p * p);
    };
    const double h = 1e-3;
    for (int k = 0; k < 1000; ++k) y = rk4_step(f, k * h, y, h);
    const Eigen::Map<const Eigen::MatrixXd> pi(y.data(), p, p);
    const Eigen::MatrixXd expect = (1.0 - std::exp(-l)) / l * phi0 * phi0.transpose();
    CHECK((pi - expect).norm() / expect.norm() < 1e-6);
  }
}

TEST_CASE("M1 and the update law") {
  IdentifierState s = IdentifierState::zero(IdentifierBasis::spring_damper_cubic());
  CHECK(m1(s).isZero(0));
  s.Pi = Eigen::MatrixXd::Identity(4, 4);
  s.W_hat = Eigen::MatrixXd::Random(4, 2);
  CHECK(m1(s).isApprox(s.W_hat, 0));

  const Eigen::MatrixXd g1 = 3.0 * Eigen::MatrixXd::Identity(4, 4);
  CHECK(update_derivative(s, nullptr, g1).isApprox(-3.0 * m1(s), 1e-15));

  ReplayStack stack(4, 0.5, 4, 2);
  stack.push({Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Zero(4, 2), 0.0});
  IdentifierState t = IdentifierState::zero(IdentifierBasis::spring_damper_cubic(), Eigen::MatrixXd::Random(4, 2));
  CHECK(update_derivative(t, &stack, Eigen::MatrixXd::Identity(4, 4)).isApprox(-t.W_hat, 1e-15));
}

TEST_CASE("true weights are an equilibrium of the update law") {
  gen::Rng rng(33);
  const auto basis = IdentifierBasis::spring_damper_cubic();
  for (int trial = 0; trial < 200; ++trial) {
    const PlantParams p{rng.uniform(0.5, 8), rng.uniform(0.5, 9), rng.uniform(0.1, 1)};
    const Eigen::MatrixXd w = true_identifier_weights(p);
    IdentifierState s = IdentifierState::zero(basis, w);
    ReplayStack stack(10, 0.5, 4, 2);
    for (int j = 0; j < rng.integer(0, 10); ++j) {
      Eigen::MatrixXd pj = Eigen::MatrixXd::Zero(4, 4);
      for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd v = regressor(basis, rng.vec(2, -2, 2), u1(rng.uniform(-2, 2)));
        pj += v * v.transpose();
      }
      stack.push({pj, pj * w, 0.5 * j});
    }
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd v = regressor(basis, rng.vec(2, -2, 2), u1(rng.uniform(-2, 2)));
      s.Pi += v * v.transpose();
    }
    s.K = s.Pi * w;
    const Eigen::MatrixXd d = update_derivative(s, &stack, 100.0 * Eigen::MatrixXd::Identity(4, 4));
    CHECK(d.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, 100.0 * (s.Pi.norm() + stack.Pi_sum().norm()) * w.norm()));
  }
}

TEST_CASE("snapshot policy") {
  ReplayStack stack(3, 0.5, 2, 1);
  const Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 1);
  CHECK(!maybe_record(stack, Eigen::Vector2d(1, 0).asDiagonal(), k, 0.2));
  CHECK(stack.size() == 0);
  CHECK(maybe_record(stack, Eigen::Vector2d(1, 0).asDiagonal(), k, 0.5));
  CHECK(maybe_record(stack, Eigen::Vector2d(0, 0.5).asDiagonal(), k, 1.0));
  CHECK(maybe_record(stack, Eigen::Vector2d(0, 0.1).asDiagonal(), k, 1.5));
  REQUIRE(stack.full());
  const double before = stack.sum_min_eig();
  CHECK(before == doctest::Approx(0.6));

  CHECK(!maybe_record(stack, Eigen::MatrixXd::Zero(2, 2), k, 2.0));
  CHECK(stack.sum_min_eig() == doctest::Approx(before));

  CHECK(maybe_record(stack, Eigen::Vector2d(0.5, 0.5).asDiagonal(), k, 2.5));
  const double after = min_eig_sym(pi_sum_of(stack, 2));
  CHECK(after > before);
  CHECK(after == doctest::Approx(stack.sum_min_eig()).epsilon(1e-14));
}

TEST_CASE("replay sums stay consistent and lambda_min never drops on acceptance") {
  gen::Rng rng(34);
  for (int trial = 0; trial < 40; ++trial) {
    ReplayStack stack(static_cast<std::size_t>(rng.integer(4, 10)), 0.5, 4, 2);
    double last = -1.0;
    for (int k = 0; k < 80; ++k) {
      Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(4, 4);
      for (int j = rng.integer(1, 3); j > 0; --j) {
        const Eigen::VectorXd v = rng.vec(4, -2, 2);
        pi += v * v.transpose();
      }
      const Eigen::MatrixXd kk = rng.vec(8, -1, 1).reshaped(4, 2);
      if (maybe_record(stack, pi, kk, 0.5 * k)) {
        const double now = stack.sum_min_eig();
        if (stack.full()) CHECK(now >= last - 1e-12 * std::max(1.0, std::abs(last)));
        last = now;
      }
      Eigen::MatrixXd ksum = Eigen::MatrixXd::Zero(4, 2);
      for (const auto& s : stack.snapshots()) ksum += s.K;
      CHECK((stack.Pi_sum() - pi_sum_of(stack, 4)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((stack.K_sum() - ksum).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(stack.size() <= stack.capacity());
    }
  }
}

TEST_CASE("estimates") {
  const auto b = IdentifierBasis::spring_damper_cubic();
  IdentifierState s = IdentifierState::zero(b);
  auto e = estimates(s, b, Eigen::Vector2d(0.3, -1));
  CHECK(e.f_hat.isZero(0));
  CHECK(e.g_hat.isZero(0));

  s.W_hat = true_identifier_weights({1, 3, 0.5});
  gen::Rng rng(35);
  for (int i = 0; i < 100; ++i) {
    e = estimates(s, b, rng.vec(2, -3, 3));
    CHECK(e.g_hat(0, 0) == 0.0);
    CHECK(e.g_hat(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  e = estimates(s, b, Eigen::Vector2d(1, 1));
  const auto d = plant_derivative({1, 1}, 0.0, {1, 3, 0.5});
  CHECK(e.f_hat(1) == doctest::Approx(-3.5).epsilon(1e-15));
  CHECK(e.f_hat(1) == doctest::Approx(d.x2).epsilon(1e-15));
  CHECK(e.f_hat(0) == doctest::Approx(d.x1).epsilon(1e-15));
}
