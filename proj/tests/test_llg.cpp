#include "spindrift/llg.hpp"

#include "spindrift/stencil.hpp"

#include <doctest.h>
#include <Eigen/Geometry>

#include <cmath>

using namespace spindrift;

namespace {

// smooth Neumann-compatible tilt, |m| = 1 exactly
Magnetization tilt_field(const Grid2D& g, double ax, double ay) {
  Vec3Field f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double c = std::cos(M_PI * g.x(i) / g.lx) * std::cos(M_PI * g.y(j) / g.ly);
      Eigen::Vector3d v{ax * c, ay * c, 1.0};
      f(i, j) = v.normalized();
    }
  return Magnetization(f);
}

Magnetization constant_field(const Grid2D& g, const Eigen::Vector3d& m) {
  Vec3Field f(g);
  f.values.colwise() = m.normalized();
  return Magnetization(f);
}

}  // namespace

TEST_SUITE("llg") {
  TEST_CASE("constant magnetization has zero right-hand side and is a fixed point") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const Magnetization m = constant_field(g, {1.0, 1.0, 1.0});
    const Vec3Field rhs = llg_rhs(m);
    CHECK(rhs.values.cwiseAbs().maxCoeff() == 0.0);

    Magnetization cur = m;
    const double dt = llg_dt_cap(g);
    for (int k = 0; k < 25; ++k) cur = llg_step(cur, dt);
    CHECK((cur.m.values - m.m.values).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("right-hand side is orthogonal to m at every node") {
    const Grid2D g(21, 21, 1.0, 1.0);
    const Magnetization m = tilt_field(g, 0.6, -0.4);
    const Vec3Field rhs = llg_rhs(m);
    for (Eigen::Index k = 0; k < g.size(); ++k)
      CHECK(std::abs(rhs.values.col(k).dot(m.m.values.col(k))) <= 1e-12);
  }

  TEST_CASE("the two algebraic forms of the right-hand side agree") {
    // triple-product identity: -m ^ (m ^ Lap m) = Lap m - (m . Lap m) m
    const Grid2D g(21, 21, 1.0, 1.0);
    const Magnetization m = tilt_field(g, 0.5, 0.3);
    const Vec3Field rhs = llg_rhs(m);
    const Vec3Field lap = laplacian_neumann(m.m);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const Eigen::Vector3d mv = m.m.values.col(k);
      const Eigen::Vector3d lv = lap.values.col(k);
      const Eigen::Vector3d alt = mv.cross(lv) + lv - mv.dot(lv) * mv;
      CHECK((rhs.values.col(k) - alt).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("unit modulus after every step and tangent update direction") {
    const Grid2D g(17, 17, 1.0, 1.0);
    Magnetization m = tilt_field(g, 0.8, 0.2);
    const double dt = llg_dt_cap(g);
    for (int k = 0; k < 50; ++k) {
      const LlgStepDetail d = llg_step_detail(m, dt);
      for (Eigen::Index node = 0; node < g.size(); ++node)
        CHECK(std::abs(d.update_direction.values.col(node).dot(m.m.values.col(node))) <= 1e-12);
      m = d.result;
      CHECK(m.modulus_defect() <= 1e-12);
    }
  }

  TEST_CASE("exchange energy is non-increasing along the flow") {
    const Grid2D g(17, 17, 1.0, 1.0);
    Magnetization m = tilt_field(g, 0.8, -0.5);
    const double dt = llg_dt_cap(g);
    double e = exchange_energy(m.m);
    const double e0 = e;
    for (int k = 0; k < 200; ++k) {
      m = llg_step(m, dt);
      const double e2 = exchange_energy(m.m);
      CHECK(e2 <= e + 1e-8 * dt);
      e = e2;
    }
    CHECK(e < e0);  // strictly dissipated overall
  }

  TEST_CASE("temporal self-convergence order is at least 1.8") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const Magnetization m0 = tilt_field(g, 0.7, 0.4);
    const double cap = llg_dt_cap(g);
    const double T = 40.0 * cap;
    auto advance = [&](double dt) {
      Magnetization m = m0;
      const int steps = static_cast<int>(std::round(T / dt));
      for (int k = 0; k < steps; ++k) m = llg_step(m, dt);
      return m;
    };
    const Magnetization a = advance(cap);
    const Magnetization b = advance(cap / 2.0);
    const Magnetization c = advance(cap / 4.0);
    const double e1 = (a.m.values - c.m.values).cwiseAbs().maxCoeff();
    const double e2 = (b.m.values - c.m.values).cwiseAbs().maxCoeff();
    // for order q: e1/e2 = (1 - 4^-q) / (2^-q - 4^-q); q = 2 gives 5
    const double order = std::log2(e1 / e2 - 1.0);
    CHECK(order >= 1.8);
  }

  TEST_CASE("time step cap is enforced and modulus drift rejected") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const Magnetization m = tilt_field(g, 0.3, 0.3);
    CHECK_THROWS_AS(llg_step(m, 10.0 * llg_dt_cap(g)), std::invalid_argument);

    Vec3Field bad(g);
    bad.values.setConstant(1.0);  // modulus sqrt(3)
    CHECK_THROWS_AS(llg_rhs(Magnetization(bad)), std::runtime_error);
  }

  TEST_CASE("exchange energy pairs with the Neumann laplacian") {
    // summation-by-parts: E(m) = -1/2 <m, Lap m>_w for the edge-sum energy
    const Grid2D g(13, 9, 1.5, 1.0);
    const Magnetization m = tilt_field(g, 0.9, -0.7);
    const Vec3Field lap = laplacian_neumann(m.m);
    double pair = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double w = g.hx() * g.hy();
        if (i == 0 || i == g.nx - 1) w *= 0.5;
        if (j == 0 || j == g.ny - 1) w *= 0.5;
        pair += w * m.m(i, j).dot(lap(i, j));
      }
    CHECK(exchange_energy(m.m) == doctest::Approx(-0.5 * pair).epsilon(1e-12));
  }
}
