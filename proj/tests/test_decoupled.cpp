#include "spindrift/decoupled.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace spindrift;
using namespace spindrift::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DualSetup {
  Grid2D g{33, 33, 1.0, 1.0};
  MaterialParams params;
  MobilityModel mob = MobilityModel::caughey_thomas(1.0, 0.6);
  SpinState init;
  SpinState dirichlet;
  ScalarField VD;
  Eigen::Vector3d m;

  explicit DualSetup(double p = 0.3)
      : params(uniform_params(g, 1.0, p, 2.2, 5.0, 0.8, 1.0)),
        init(g),
        dirichlet(g),
        VD(fill(g, [](double x, double y) { return 0.5 * x - 0.2 * y; })),
        m(Eigen::Vector3d{1.0, 1.0, 1.0}.normalized()) {
    init.n[0] = fill(g, [](double x, double y) {
      return 1.0 + 0.25 * std::sin(M_PI * x) * std::sin(M_PI * y);
    });
    init.n[1] = fill(g, [](double x, double y) { return 0.2 * std::sin(M_PI * x) * std::sin(M_PI * y); });
    init.n[2] = fill(g, [](double x, double y) { return -0.1 * std::sin(2 * M_PI * x) * std::sin(M_PI * y); });
    init.n[3] = fill(g, [](double x, double y) { return 0.15 * std::sin(M_PI * x) * std::sin(2 * M_PI * y); });
    dirichlet = constant_state(g, 1.0);
  }
};

}  // namespace

TEST_SUITE("decoupled") {
  TEST_CASE("p = 0 with zero spin keeps n+ = n- and n_perp = 0") {
    DualSetup su(0.0);
    su.init.n[1] = ScalarField(su.g);
    su.init.n[2] = ScalarField(su.g);
    su.init.n[3] = ScalarField(su.g);
    SolverConfig cfg;
    cfg.h = 1e-3;
    cfg.fp_tol = 1e-12;
    const DecoupledStepper stepper(su.g, su.params, su.mob, su.dirichlet, su.VD, cfg, su.m);
    const Vec3Field mf = constant_m_field(su.g, su.m);
    const DecoupledResult res =
        solve_decoupled_constant_m(to_diag_state(su.init, mf), su.m, 0.02, stepper, 0);
    CHECK((res.final_state.n_plus.values - res.final_state.n_minus.values).abs().maxCoeff() <=
          1e-12);
    CHECK(res.final_state.n_perp.values.cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("dual-path oracle: diagonalized and primal solvers agree") {
    DualSetup su;
    SolverConfig cfg;
    cfg.h = 1e-3;
    cfg.fp_tol = 1e-12;
    cfg.cg_tol = 1e-13;
    const double T = 0.02;
    const int every = 4;

    const TransportStepper primal(su.g, su.params, su.mob, su.dirichlet, su.VD, cfg);
    const Vec3Field mf = constant_m_field(su.g, su.m);
    const TransientResult pres =
        run_transient(su.init, Magnetization(mf), true, T, primal, every);

    const DecoupledStepper dual(su.g, su.params, su.mob, su.dirichlet, su.VD, cfg, su.m);
    const DecoupledResult dres =
        solve_decoupled_constant_m(to_diag_state(su.init, mf), su.m, T, dual, every);

    REQUIRE(pres.samples.size() == dres.samples.size());
    for (std::size_t k = 0; k < pres.samples.size(); ++k) {
      const SpinState back = from_diag_state(dres.samples[k].state, mf);
      CHECK(l2_distance(pres.samples[k].state, back) <= 1e-6);
    }
  }

  TEST_CASE("dual-path agreement survives space-varying D and p") {
    DualSetup su;
    MaterialParams varying(
        fill(su.g, [](double x, double y) { return 1.0 + 0.4 * x + 0.2 * y; }),
        fill(su.g, [](double x, double y) { return 0.3 + 0.2 * std::sin(M_PI * x) * std::sin(M_PI * y); }),
        fill(su.g, [](double, double) { return 2.2; }), 5.0, 0.8, 1.0);
    SolverConfig cfg;
    cfg.h = 1e-3;
    cfg.fp_tol = 1e-12;
    const double T = 0.01;

    const TransportStepper primal(su.g, varying, su.mob, su.dirichlet, su.VD, cfg);
    const Vec3Field mf = constant_m_field(su.g, su.m);
    const TransientResult pres = run_transient(su.init, Magnetization(mf), true, T, primal, 5);
    const DecoupledStepper dual(su.g, varying, su.mob, su.dirichlet, su.VD, cfg, su.m);
    const DecoupledResult dres =
        solve_decoupled_constant_m(to_diag_state(su.init, mf), su.m, T, dual, 5);
    for (std::size_t k = 0; k < pres.samples.size(); ++k)
      CHECK(l2_distance(pres.samples[k].state, from_diag_state(dres.samples[k].state, mf)) <= 1e-6);
  }

  TEST_CASE("homogeneous transverse spin decays at 1/tau while precessing") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const double tau = 2.0, gamma = 1.5, T = 1.0, h = 5e-3, s0 = 0.4;
    const MaterialParams params = uniform_params(g, 1e-8, 0.0, 2.0, tau, gamma, 1.0);
    const Eigen::Vector3d m{0.0, 0.0, 1.0};
    const SpinState dirichlet = constant_state(g, 1.0, {s0, 0.0, 0.0});
    SolverConfig cfg;
    cfg.h = h;
    const DecoupledStepper stepper(g, params, MobilityModel::caughey_thomas(1e-12, 1e-12),
                                   dirichlet, ScalarField(g), cfg, m);
    DiagState init = stepper.diag_dirichlet();
    const DecoupledResult res = solve_decoupled_constant_m(init, m, T, stepper, 0);

    // closed form: n_perp rotates by -2 gamma t and decays by exp(-t/tau)
    const double decay = s0 * std::exp(-T / tau);
    const double angle = -2.0 * gamma * T;
    const Eigen::Vector3d q = res.final_state.n_perp(8, 8);
    CHECK(std::abs(q.norm() - decay) <= 3.0 * h * T);
    CHECK(std::abs(q[0] - decay * std::cos(angle)) <= 3.0 * h * T);
    CHECK(std::abs(q[1] - decay * std::sin(angle)) <= 3.0 * h * T);
    CHECK(std::abs(q[2]) <= 1e-12);
  }

  TEST_CASE("n_perp stays orthogonal to m along the decoupled evolution") {
    DualSetup su;
    SolverConfig cfg;
    cfg.h = 1e-3;
    const DecoupledStepper stepper(su.g, su.params, su.mob, su.dirichlet, su.VD, cfg, su.m);
    const Vec3Field mf = constant_m_field(su.g, su.m);
    const DecoupledResult res =
        solve_decoupled_constant_m(to_diag_state(su.init, mf), su.m, 0.02, stepper, 0);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < su.g.size(); ++k)
      worst = std::max(worst, std::abs(res.final_state.n_perp.values.col(k).dot(su.m)));
    CHECK(worst <= 1e-10 * 0.02 * 1e3);  // 1e-10 per unit time budget
  }

  TEST_CASE("zero state has exactly zero diagonalized residual") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const MaterialParams params = uniform_params(g, 1.0, 0.3, 2.0, 1.0, 1.0, 1.0);
    const SpinState zero(g);
    const Vec3Field m = constant_m_field(g, Eigen::Vector3d{0, 0, 1});
    const FieldSolution field = drift_velocity(ScalarField(g), MobilityModel::caughey_thomas(1, 1));
    const DiagResidual r = diag_residual(zero, zero, m, nullptr, field, params, 1e-3);
    CHECK(r.interior_linf() == 0.0);
    CHECK(r.dt_m_missing);
  }

  TEST_CASE("diagonalized residual vanishes at the scheme's order on a solve") {
    // constant m: the residual measures pure discretization error of the
    // transport step against the diagonalized form; measured three nodes in,
    // where no one-sided stencils enter
    auto residual_at = [](int n, double h) {
      DualSetup su;
      const Grid2D g(n, n, 1.0, 1.0);
      MaterialParams params = uniform_params(g, 1.0, 0.3, 2.2, 5.0, 0.8, 1.0);
      SpinState init(g);
      init.n[0] = fill(g, [](double x, double y) { return 1.0 + 0.25 * std::sin(M_PI * x) * std::sin(M_PI * y); });
      init.n[1] = fill(g, [](double x, double y) { return 0.2 * std::sin(M_PI * x) * std::sin(M_PI * y); });
      const SpinState dirichlet = constant_state(g, 1.0);
      const ScalarField VD = fill(g, [](double x, double y) { return 0.5 * x - 0.2 * y; });
      SolverConfig cfg;
      cfg.h = h;
      cfg.fp_tol = 1e-12;
      const TransportStepper stepper(g, params, su.mob, dirichlet, VD, cfg);
      const Vec3Field mf = constant_m_field(g, Eigen::Vector3d{0, 0, 1});
      const StepOutcome out = stepper.step(init, mf, 0.0);
      const DiagResidual r =
          diag_residual(out.state, init, mf, nullptr, out.field, params, h);
      return std::make_pair(r.interior_linf(3), r.interior_linf(1));
    };
    // joint refinement h ~ hx^2 keeps both error sources shrinking together
    const auto [deep1, full1] = residual_at(17, 4e-3);
    const auto [deep2, full2] = residual_at(33, 1e-3);
    CHECK(std::log2(deep1 / deep2) >= 1.7);  // interior truncation order 2
    CHECK(std::log2(full1 / full2) >= 0.7);  // boundary ring one order lower

    // absolute size: 5 (h + hx^2) scaled by the flux magnitude of the state
    const double h = 1e-3, hx = 1.0 / 32.0;
    CHECK(deep2 <= 5.0 * (h + hx * hx) * 3.0);
  }

  TEST_CASE("residual via independent fine-difference oracle on analytic fields") {
    // time-independent manufactured fields; the continuous residual of the
    // diagonalized equations is evaluated with high-accuracy central
    // differences directly on the closed forms, independent of mesh_ops
    const double a = 0.8;  // m = (sin(a x), 0, cos(a x))
    auto m_of = [a](double x, double) {
      return Eigen::Vector3d{std::sin(a * x), 0.0, std::cos(a * x)};
    };
    auto n_of = [](double x, double y) {
      return Eigen::Vector4d{1.0 + 0.3 * std::sin(M_PI * x) * std::sin(M_PI * y),
                             0.2 * std::sin(M_PI * x) * std::sin(M_PI * y),
                             0.1 * std::sin(M_PI * x) * std::cos(M_PI * y),
                             -0.15 * std::cos(M_PI * x) * std::sin(M_PI * y)};
    };
    const double D = 1.0, p = 0.4, tau = 2.0, gamma = 0.7;
    const double eta = std::sqrt(1.0 - p * p);

    // continuous residual of the n+ equation at (x, y), v = 0, dm/dt = 0:
    //   -(d/dt terms) - div(c+ grad n+) - rhs, with fine central differences
    auto np_of = [&](double x, double y) {
      const Eigen::Vector4d n = n_of(x, y);
      return n(0) + n.tail<3>().dot(m_of(x, y));
    };
    auto exact_residual_plus = [&](double x, double y) {
      const double d = 1e-5;
      const double cp = D / (1.0 + p);
      auto lap = [&](auto f, double X, double Y) {
        return (f(X + d, Y) + f(X - d, Y) + f(X, Y + d) + f(X, Y - d) - 4.0 * f(X, Y)) / (d * d);
      };
      auto dx = [&](auto f, double X, double Y) { return (f(X + d, Y) - f(X - d, Y)) / (2 * d); };
      auto dy = [&](auto f, double X, double Y) { return (f(X, Y + d) - f(X, Y - d)) / (2 * d); };

      const double lhs = -cp * lap(np_of, x, y);
      // rhs (+ case): -div(c+ (n . dm)) - D/eta (dm . dn) - (n.m)/tau
      auto ndmx = [&](double X, double Y) {
        const Eigen::Vector3d dmx = (m_of(X + d, Y) - m_of(X - d, Y)) / (2 * d);
        return n_of(X, Y).tail<3>().dot(dmx) * cp;
      };
      auto ndmy = [&](double X, double Y) {
        const Eigen::Vector3d dmy = (m_of(X, Y + d) - m_of(X, Y - d)) / (2 * d);
        return n_of(X, Y).tail<3>().dot(dmy) * cp;
      };
      double gg = 0.0;
      {
        const Eigen::Vector3d dmx = (m_of(x + d, y) - m_of(x - d, y)) / (2 * d);
        const Eigen::Vector3d dmy = (m_of(x, y + d) - m_of(x, y - d)) / (2 * d);
        for (int s = 0; s < 3; ++s) {
          auto ns = [&](double X, double Y) { return n_of(X, Y)(s + 1); };
          gg += dmx[s] * dx(ns, x, y) + dmy[s] * dy(ns, x, y);
        }
      }
      const double rhs = -(dx(ndmx, x, y) + dy(ndmy, x, y)) - D / eta * gg -
                         n_of(x, y).tail<3>().dot(m_of(x, y)) / tau;
      return lhs - rhs;
    };

    auto grid_residual = [&](int nn) {
      const Grid2D g(nn, nn, 1.0, 1.0);
      MaterialParams params = uniform_params(g, D, p, 2.0, tau, gamma, 1.0);
      SpinState state(g);
      Vec3Field m(g);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const Eigen::Vector4d n = n_of(g.x(i), g.y(j));
          for (int c = 0; c < 4; ++c) state.n[c](i, j) = n(c);
          m(i, j) = m_of(g.x(i), g.y(j));
        }
      FieldSolution field;
      field.V = ScalarField(g);
      field.vx = ScalarField(g);
      field.vy = ScalarField(g);
      field.dVdx = ScalarField(g);
      field.dVdy = ScalarField(g);
      // huge h: the time-difference term vanishes for the static state
      const DiagResidual r = diag_residual(state, state, m, nullptr, field, params, 1e9);
      double worst = 0.0;
      for (int j = 2; j < g.ny - 2; ++j)
        for (int i = 2; i < g.nx - 2; ++i)
          worst = std::max(worst,
                           std::abs(r.r_plus(i, j) - exact_residual_plus(g.x(i), g.y(j))));
      return worst;
    };

    const double e1 = grid_residual(17);
    const double e2 = grid_residual(33);
    const double e3 = grid_residual(65);
    CHECK(std::log2(e1 / e2) >= 1.7);
    CHECK(std::log2(e2 / e3) >= 1.7);
  }

  TEST_CASE("source bound: zero state makes both sides vanish") {
    const Grid2D g(17, 17, 1.0, 1.0);
    const MaterialParams params = uniform_params(g, 1.0, 0.3, 2.0, 1.0, 1.0, 1.0);
    const SpinState zero(g);
    const Vec3Field m = constant_m_field(g, Eigen::Vector3d{0, 0, 1});
    const FieldSolution field = drift_velocity(ScalarField(g), MobilityModel::caughey_thomas(1, 1));
    const SourceBoundReport rep = source_bound_check(zero, zero, m, nullptr, field, params, 1e-3);
    CHECK(rep.max_ratio == 0.0);
    CHECK(rep.dominated);
  }

  TEST_CASE("source bound dominates for constant m") {
    DualSetup su;
    const Vec3Field mf = constant_m_field(su.g, su.m);
    const FieldSolution field = drift_velocity(su.VD, su.mob);
    const SourceBoundReport rep =
        source_bound_check(su.init, su.init, mf, nullptr, field, su.params, 1e-3);
    CHECK(rep.dominated);
  }

  TEST_CASE("source bound dominates on a live Landau-Lifshitz state") {
    const Grid2D g(21, 21, 1.0, 1.0);
    const MaterialParams params = uniform_params(g, 1.0, 0.3, 2.2, 2.0, 0.8, 1.0);
    const MobilityModel mob = MobilityModel::caughey_thomas(1.0, 0.6);
    Vec3Field mfield(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double c = std::cos(M_PI * g.x(i)) * std::cos(M_PI * g.y(j));
        mfield(i, j) = Eigen::Vector3d{0.6 * c, -0.3 * c, 1.0}.normalized();
      }
    Magnetization m0(mfield);
    SpinState init = constant_state(g, 1.0, {0.1, -0.05, 0.2});
    init.n[0] = fill(g, [](double x, double y) { return 1.0 + 0.2 * std::sin(M_PI * x) * std::sin(M_PI * y); });
    SolverConfig cfg;
    cfg.h = 1e-3;
    const TransportStepper stepper(g, params, mob, constant_state(g, 1.0),
                                   fill(g, [](double x, double) { return 0.4 * x; }), cfg);
    SpinState prev = init;
    Vec3Field m_prev = m0.m;
    Magnetization m = m0;
    SpinState cur = init;
    for (int k = 0; k < 5; ++k) {
      prev = cur;
      m_prev = m.m;
      const double cap = llg_dt_cap(g);
      Magnetization mm = m;
      double left = cfg.h;
      while (left > 1e-15) {
        const double dt = std::min(cap, left);
        mm = llg_step(mm, dt);
        left -= dt;
      }
      m = mm;
      cur = stepper.step(prev, m.m, k * cfg.h).state;
    }
    const ScalarField V = solve_poisson(cur.n[0], params, fill(g, [](double x, double) { return 0.4 * x; }));
    const FieldSolution field = drift_velocity(V, mob);
    const SourceBoundReport rep =
        source_bound_check(cur, prev, m.m, &m_prev, field, params, cfg.h);
    CHECK(rep.dominated);
    CHECK(rep.max_ratio > 0.0);
  }
}
