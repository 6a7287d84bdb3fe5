#include "spindrift/steady_state.hpp"

#include "spindrift/diagnostics.hpp"
#include "spindrift/stencil.hpp"

#include <cmath>

namespace spindrift {

namespace {

// mu(|grad V|) grad V evaluated nodewise
std::pair<ScalarField, ScalarField> mobility_flux(const ScalarField& V,
                                                  const MobilityModel& mobility) {
  auto [gx, gy] = gradient(V);
  ScalarField wx(V.grid), wy(V.grid);
  for (Eigen::Index k = 0; k < V.grid.size(); ++k) {
    const double mu = mobility.mu(std::hypot(gx.values[k], gy.values[k]));
    wx.values[k] = mu * gx.values[k];
    wy.values[k] = mu * gy.values[k];
  }
  return {std::move(wx), std::move(wy)};
}

double rel_update(const Eigen::ArrayXd& next, const Eigen::ArrayXd& cur) {
  return (next - cur).abs().maxCoeff() / (1.0 + cur.abs().maxCoeff());
}

}  // namespace

Equilibrium solve_equilibrium(const MaterialParams& params, const MobilityModel& mobility,
                              const ScalarField& n0D, const ScalarField& VD,
                              const GummelOptions& opts) {
  const Grid2D& g = n0D.grid;
  require_same_grid(g, VD.grid, "solve_equilibrium");
  require_same_grid(g, params.C.grid, "solve_equilibrium");
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.is_boundary(i, j) && !(n0D(i, j) > 0.0))
        throw std::invalid_argument("solve_equilibrium: n0^D > 0 required on the boundary");

  const double lam2 = params.lambdaD * params.lambdaD;
  const DirichletEllipticSolver laplace(g, 1.0);

  // start from the harmonic extension of the boundary density
  const ScalarField zero(g);
  ScalarField n0 = laplace.solve(zero, n0D);
  ScalarField u(g);
  u.values = n0.values.max(1e-300).log();
  ScalarField uD(g);
  uD.values = n0D.values.max(1e-300).log();

  DirichletEllipticSolver poisson(g, lam2);
  ScalarField rhs0(g);
  rhs0.values = 2.0 * n0.values - params.C.values;
  ScalarField V = poisson.solve(rhs0, VD);

  std::vector<double> history;
  int sweeps = 0;
  bool converged = false;
  const ScalarField zero_trace(g);

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    // (1) continuity in log variables: -Lap u = div(mu grad V), u = u^D
    auto [wx, wy] = mobility_flux(V, mobility);
    const ScalarField divw = divergence(wx, wy);
    const ScalarField u_new = laplace.solve(divw, uD);

    ScalarField u_next(g);
    u_next.values = u.values + opts.damping * (u_new.values - u.values);

    // (2) nonlinear Poisson with the Gummel exponential
    //     lambda^2 Lap V + 2 exp(u - mu_hat (V - V_sweep)) - C = 0
    auto [gx, gy] = gradient(V);
    ScalarField mu_hat(g);
    for (Eigen::Index k = 0; k < g.size(); ++k)
      mu_hat.values[k] = mobility.mu(std::hypot(gx.values[k], gy.values[k]));
    const ScalarField V_sweep = V;

    ScalarField V_newton = V;
    for (int it = 0; it < opts.newton_max; ++it) {
      ScalarField expo(g);
      expo.values = (u_next.values - mu_hat.values * (V_newton.values - V_sweep.values)).exp();
      const ScalarField lapV = laplacian(V_newton, BoundaryKind::dirichlet(V_newton));
      // residual F = lambda^2 Lap V + 2 exp(..) - C at interior nodes
      ScalarField F(g);
      F.values = lam2 * lapV.values + 2.0 * expo.values - params.C.values;
      ScalarField q(g);
      q.values = 2.0 * mu_hat.values * expo.values;
      DirichletEllipticSolver newton_op(g, lam2, &q);
      const ScalarField delta = newton_op.solve(F, zero_trace);
      V_newton.values += delta.values;
      if (delta.values.abs().maxCoeff() <= 1e-13 * (1.0 + V_newton.values.abs().maxCoeff()))
        break;
    }
    ScalarField V_next(g);
    V_next.values = V.values + opts.damping * (V_newton.values - V.values);

    const double upd = std::max(rel_update(u_next.values, u.values),
                                rel_update(V_next.values, V.values));
    history.push_back(upd);
    u = std::move(u_next);
    V = std::move(V_next);
    sweeps = sweep + 1;
    if (upd < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw GummelError("solve_equilibrium: Gummel stagnation, no convergence", std::move(history));

  Equilibrium eq;
  eq.u_eq = u;
  eq.n0_eq = ScalarField(g);
  eq.n0_eq.values = u.values.exp();
  eq.V_eq = V;
  eq.gummel_sweeps = sweeps;

  auto [curl, curl_l2] = curl_constraint_residual(V, mobility);
  eq.curl_residual = std::move(curl);
  eq.curl_l2 = curl_l2;

  // discrete residual of the zero-current identity grad n0 + n0 mu grad V = 0
  auto [nx_, ny_] = gradient(eq.n0_eq);
  auto [wx, wy] = mobility_flux(V, mobility);
  double zf = 0.0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      const Eigen::Index k = g.idx(i, j);
      zf = std::max(zf, std::hypot(nx_.values[k] + eq.n0_eq.values[k] * wx.values[k],
                                   ny_.values[k] + eq.n0_eq.values[k] * wy.values[k]));
    }
  eq.zero_flux_linf = zf;

  const double ninf = eq.n0_eq.values.abs().maxCoeff();
  eq.smallness = mobility.vsat * mobility.vsat +
                 mobility.L * mobility.L / std::pow(params.lambdaD, 4) * ninf * ninf;
  return eq;
}

std::pair<ScalarField, double> curl_constraint_residual(const ScalarField& V_eq,
                                                        const MobilityModel& mobility) {
  auto [wx, wy] = mobility_flux(V_eq, mobility);
  auto [w2x, w2y] = gradient(wy);
  auto [w1x, w1y] = gradient(wx);
  ScalarField curl(V_eq.grid);
  curl.values = w2x.values - w1y.values;
  const Eigen::ArrayXd w = quadrature_weights(V_eq.grid);
  const double l2 = std::sqrt((w * curl.values.square()).sum());
  return {std::move(curl), l2};
}

DecayFit decay_analysis(const std::vector<std::pair<double, double>>& norm_history,
                        const Equilibrium& eq, double window_skip_fraction, double floor) {
  DecayFit fit;
  fit.smallness = eq.smallness;
  if (norm_history.size() < 3) return fit;

  const double t0 = norm_history.front().first;
  const double t1 = norm_history.back().first;
  const double t_start = t0 + window_skip_fraction * (t1 - t0);

  double max_norm = 0.0;
  for (const auto& [t, v] : norm_history)
    if (t >= t_start) max_norm = std::max(max_norm, v);
  if (max_norm <= floor) {
    fit.fitted = false;  // already at equilibrium; nothing to fit
    return fit;
  }

  // least squares on log ||n - n_eq|| over the window
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int count = 0;
  double prev = -1.0;
  int upticks = 0;
  for (const auto& [t, v] : norm_history) {
    if (t < t_start || !(v > 0.0)) continue;
    const double y = std::log(v);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    syy += y * y;
    ++count;
    if (prev > 0.0 && v > prev * (1.0 + 1e-6)) ++upticks;
    prev = v;
  }
  if (count < 3) return fit;
  fit.upticks = upticks;

  const double det = count * sxx - sx * sx;
  const double slope = (count * sxy - sx * sy) / det;
  const double intercept = (sy * sxx - sx * sxy) / det;
  fit.k2 = -slope;
  fit.k1 = std::exp(intercept);
  const double ss_tot = syy - sy * sy / count;
  const double ss_res = syy - intercept * sy - slope * sxy;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.fitted = true;
  fit.reliable = upticks == 0;
  return fit;
}

}  // namespace spindrift
