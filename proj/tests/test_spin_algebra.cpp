#include "spindrift/spin_algebra.hpp"

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

using namespace spindrift;

namespace {

std::mt19937 rng(771);

Eigen::Vector3d random_unit() {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d m{u(rng), u(rng), u(rng)};
  while (m.norm() < 1e-3) m = {u(rng), u(rng), u(rng)};
  return m.normalized();
}

// independent construction of the projector sum from the block formulas
Eigen::Matrix4d projector_sum(double D, double p, const Eigen::Vector3d& m) {
  const double eta = std::sqrt(1.0 - p * p);
  const SpinProjectors<double> P = projectors(m);
  return D / (1.0 + p) * P.plus + D / (1.0 - p) * P.minus + D / eta * P.perp;
}

}  // namespace

TEST_SUITE("spin_algebra") {
  TEST_CASE("p = 0 gives the identity diffusion matrix") {
    const Eigen::Vector3d m{0.0, 0.0, 1.0};
    const Eigen::Matrix4d A = assemble_diffusion_matrix(1.0, 0.0, m);
    CHECK((A - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <= 1e-14);
  }

  TEST_CASE("eigenvalues are D/(1+p), D/(1-p), D/eta, D/eta") {
    const Eigen::Matrix4d A = assemble_diffusion_matrix(2.0, 0.6, random_unit());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(A);
    Eigen::Vector4d expect{1.25, 2.5, 2.5, 5.0};
    CHECK((es.eigenvalues() - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("eigenvalues never depend on m") {
    for (int k = 0; k < 50; ++k) {
      const double D = 0.2 + k * 0.05, p = -0.9 + k * 0.035;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> e1(assemble_diffusion_matrix(D, p, random_unit()));
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> e2(assemble_diffusion_matrix(D, p, random_unit()));
      CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("block formula equals the spectral projector sum") {
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int k = 0; k < 200; ++k) {
      const double D = 0.1 + std::abs(u(rng)), p = u(rng);
      const Eigen::Vector3d m = random_unit();
      const Eigen::Matrix4d A = assemble_diffusion_matrix(D, p, m);
      CHECK((A - projector_sum(D, p, m)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("quantified positive definiteness: x.Ax >= D/(1+|p|) |x|^2") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const double D = 0.1 + std::abs(u(rng)), p = 0.95 * u(rng);
      const Eigen::Matrix4d A = assemble_diffusion_matrix(D, p, random_unit());
      const Eigen::Vector4d x{u(rng), u(rng), u(rng), u(rng)};
      CHECK(x.dot(A * x) >= D / (1.0 + std::abs(p)) * x.squaredNorm() - 1e-12);
    }
  }

  TEST_CASE("projectors: idempotent, orthogonal, partition of unity") {
    for (int k = 0; k < 100; ++k) {
      const Eigen::Vector3d m = random_unit();
      const SpinProjectors<double> P = projectors(m);
      for (const Eigen::Matrix4d* Pi : {&P.plus, &P.minus, &P.perp})
        CHECK((*Pi * *Pi - *Pi).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((P.plus * P.minus).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((P.plus * P.perp).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((P.minus * P.perp).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((P.plus + P.minus + P.perp - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <=
            1e-13);
    }
  }

  TEST_CASE("perp projector for m = e3 is the in-plane spin block") {
    const SpinProjectors<double> P = projectors(Eigen::Vector3d{0.0, 0.0, 1.0});
    Eigen::Matrix4d want = Eigen::Matrix4d::Zero();
    want(1, 1) = want(2, 2) = 1.0;
    CHECK((P.perp - want).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("non-unit m is rejected") {
    CHECK_THROWS_AS(projectors(Eigen::Vector3d{0.0, 0.0, 2.0}), std::domain_error);
    CHECK_THROWS_AS(assemble_diffusion_matrix(1.0, 1.0, Eigen::Vector3d{0, 0, 1}),
                    std::domain_error);
  }

  TEST_CASE("reaction matrix: gamma = 0 leaves pure relaxation") {
    const Eigen::Matrix4d B = assemble_reaction_matrix(0.0, 2.0, Eigen::Vector3d{0, 0, 1});
    Eigen::Matrix4d want = Eigen::Matrix4d::Zero();
    want(1, 1) = want(2, 2) = want(3, 3) = -0.5;
    CHECK((B - want).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("spin aligned with m only relaxes") {
    const Eigen::Vector3d m = random_unit();
    const Eigen::Matrix4d B = assemble_reaction_matrix(3.0, 2.0, m);
    Eigen::Vector4d x;
    x << 0.0, m;
    const Eigen::Vector4d y = B * x;
    CHECK((y.tail<3>() + m / 2.0).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(y(0) == 0.0);
  }

  TEST_CASE("precession sign per hand evaluation and an RK4 oracle") {
    const Eigen::Vector3d m{0.0, 0.0, 1.0};
    const double tau = std::numeric_limits<double>::infinity();
    const Eigen::Matrix4d B = assemble_reaction_matrix(1.0, tau, m);
    Eigen::Vector4d x{0.0, 1.0, 0.0, 0.0};
    const Eigen::Vector4d y = B * x;
    CHECK(y(1) == doctest::Approx(0.0));
    CHECK(y(2) == doctest::Approx(-2.0));
    CHECK(y(3) == doctest::Approx(0.0));

    // single homogeneous node: dx/dt = Bx integrated by RK4 vs the closed form
    // (cos 2gt, -sin 2gt) e^{-t/tau} with finite tau
    const double g = 1.0, tau2 = 10.0;
    const Eigen::Matrix4d B2 = assemble_reaction_matrix(g, tau2, m);
    Eigen::Vector4d u{0.0, 1.0, 0.0, 0.0};
    const double dt = 1e-4, T = 1.0;
    const int steps = static_cast<int>(T / dt);
    for (int k = 0; k < steps; ++k) {
      const Eigen::Vector4d k1 = B2 * u;
      const Eigen::Vector4d k2 = B2 * (u + 0.5 * dt * k1);
      const Eigen::Vector4d k3 = B2 * (u + 0.5 * dt * k2);
      const Eigen::Vector4d k4 = B2 * (u + dt * k3);
      u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double decay = std::exp(-T / tau2);
    CHECK(u(1) == doctest::Approx(decay * std::cos(2.0 * g * T)).epsilon(1e-8));
    CHECK(u(2) == doctest::Approx(-decay * std::sin(2.0 * g * T)).epsilon(1e-8));
  }

  TEST_CASE("x.Bx <= 0 with equality only for zero spin") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      const Eigen::Matrix4d B = assemble_reaction_matrix(2.0, 0.5, random_unit());
      const Eigen::Vector4d x{u(rng), u(rng), u(rng), u(rng)};
      const double q = x.dot(B * x);
      CHECK(q <= 1e-14);
      CHECK(q == doctest::Approx(-x.tail<3>().squaredNorm() / 0.5).epsilon(1e-10));
    }
  }

  TEST_CASE("to_diag special values") {
    const Eigen::Vector3d m = random_unit();
    auto [np, nm, nperp] = to_diag(Eigen::Vector4d{3.0, 0.0, 0.0, 0.0}, m);
    CHECK(np == doctest::Approx(3.0));
    CHECK(nm == doctest::Approx(3.0));
    CHECK(nperp.norm() <= 1e-15);

    Eigen::Vector4d aligned;
    aligned << 1.0, m;
    auto [np2, nm2, nperp2] = to_diag(aligned, m);
    CHECK(np2 == doctest::Approx(2.0));
    CHECK(nm2 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(nperp2.norm() <= 1e-14);
  }

  TEST_CASE("roundtrip identity and perpendicularity") {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector3d m = random_unit();
      const Eigen::Vector4d n{u(rng), u(rng), u(rng), u(rng)};
      auto [np, nm, nperp] = to_diag(n, m);
      CHECK(std::abs(nperp.dot(m)) <= 1e-13);
      const Eigen::Vector4d back = from_diag(np, nm, nperp, m);
      CHECK((back - n).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }

  TEST_CASE("from_diag projects stray m-components out of n_perp") {
    const Eigen::Vector3d m{0.0, 0.0, 1.0};
    const Eigen::Vector3d drifted{0.5, 0.0, 1e-11};
    const Eigen::Vector4d n = from_diag(1.0, 1.0, drifted, m);
    CHECK(n(3) == doctest::Approx(0.0).epsilon(1e-14));  // stray z part removed
    CHECK(n(1) == doctest::Approx(0.5));
  }
}
