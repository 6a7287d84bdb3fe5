#include "spindrift/decoupled.hpp"

#include "spindrift/stencil.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <cmath>

namespace spindrift {

DiagState to_diag_state(const SpinState& n, const Vec3Field& m) {
  require_same_grid(n.grid(), m.grid, "to_diag_state");
  DiagState d(n.grid());
  for (Eigen::Index k = 0; k < n.grid().size(); ++k) {
    const Eigen::Vector4d nk{n.n[0].values[k], n.n[1].values[k], n.n[2].values[k],
                             n.n[3].values[k]};
    const Eigen::Vector3d mk = m.values.col(k);
    auto [np, nm, nperp] = to_diag(nk, mk);
    d.n_plus.values[k] = np;
    d.n_minus.values[k] = nm;
    d.n_perp.values.col(k) = nperp;
  }
  return d;
}

SpinState from_diag_state(const DiagState& d, const Vec3Field& m) {
  require_same_grid(d.n_plus.grid, m.grid, "from_diag_state");
  SpinState n(d.n_plus.grid);
  for (Eigen::Index k = 0; k < m.grid.size(); ++k) {
    const Eigen::Vector3d mk = m.values.col(k);
    const Eigen::Vector4d nk =
        from_diag(d.n_plus.values[k], d.n_minus.values[k],
                  Eigen::Vector3d(d.n_perp.values.col(k)), mk);
    for (int c = 0; c < 4; ++c) n.n[c].values[k] = nk[c];
  }
  return n;
}

Vec3Field constant_m_field(const Grid2D& g, const Eigen::Vector3d& m) {
  if (std::abs(m.norm() - 1.0) > 1e-10)
    throw std::domain_error("constant_m_field: unit vector required");
  Vec3Field f(g);
  f.values.colwise() = m;
  return f;
}

namespace {

inline double face_avg(double a, double b, bool harmonic) {
  return harmonic ? 2.0 * a * b / (a + b) : 0.5 * (a + b);
}

Eigen::SparseMatrix<double> assemble_scalar_matrix(const Grid2D& g, const ScalarField& c,
                                                   double h, bool harmonic) {
  const int nx = g.nx, ny = g.ny, nix = nx - 2;
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  auto iidx = [nix](int i, int j) { return static_cast<Eigen::Index>(j - 1) * nix + (i - 1); };
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<std::size_t>(nix) * (ny - 2));
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      double diag = 1.0;
      for (int d = 0; d < 4; ++d) {
        const int qi = i + di[d], qj = j + dj[d];
        const double w = h * (dj[d] == 0 ? ihx2 : ihy2) * face_avg(c(i, j), c(qi, qj), harmonic);
        diag += w;
        if (!g.is_boundary(qi, qj)) trip.emplace_back(iidx(i, j), iidx(qi, qj), -w);
      }
      trip.emplace_back(iidx(i, j), iidx(i, j), diag);
    }
  Eigen::SparseMatrix<double> M(static_cast<Eigen::Index>(nix) * (ny - 2),
                                static_cast<Eigen::Index>(nix) * (ny - 2));
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd scalar_rhs(const Grid2D& g, const ScalarField& prev, const ScalarField& iter,
                           const ScalarField& reaction, const ScalarField& c,
                           const FieldSolution& field, double h, const ScalarField& trace,
                           bool harmonic) {
  const int nx = g.nx, ny = g.ny, nix = nx - 2;
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const double i2hx = 1.0 / (2.0 * g.hx());
  const double i2hy = 1.0 / (2.0 * g.hy());
  auto iidx = [nix](int i, int j) { return static_cast<Eigen::Index>(j - 1) * nix + (i - 1); };

  // nodal drift products c * u * v
  Eigen::ArrayXd wx = c.values * iter.values * field.vx.values;
  Eigen::ArrayXd wy = c.values * iter.values * field.vy.values;

  Eigen::VectorXd rhs(static_cast<Eigen::Index>(nix) * (ny - 2));
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      double r = prev(i, j) + h * reaction(i, j);
      r -= h * ((wx[g.idx(i + 1, j)] - wx[g.idx(i - 1, j)]) * i2hx +
                (wy[g.idx(i, j + 1)] - wy[g.idx(i, j - 1)]) * i2hy);
      if (i == 1) r += h * ihx2 * face_avg(c(i, j), c(0, j), harmonic) * trace(0, j);
      if (i == nx - 2) r += h * ihx2 * face_avg(c(i, j), c(nx - 1, j), harmonic) * trace(nx - 1, j);
      if (j == 1) r += h * ihy2 * face_avg(c(i, j), c(i, 0), harmonic) * trace(i, 0);
      if (j == ny - 2) r += h * ihy2 * face_avg(c(i, j), c(i, ny - 1), harmonic) * trace(i, ny - 1);
      rhs[iidx(i, j)] = r;
    }
  return rhs;
}

Eigen::VectorXd scalar_interior(const ScalarField& f) {
  const Grid2D& g = f.grid;
  const int nix = g.nx - 2;
  Eigen::VectorXd v(static_cast<Eigen::Index>(nix) * (g.ny - 2));
  Eigen::Index row = 0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) v[row++] = f(i, j);
  return v;
}

ScalarField scalar_compose(const Grid2D& g, const Eigen::VectorXd& interior,
                           const ScalarField& trace) {
  ScalarField out(g);
  Eigen::Index row = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = g.is_boundary(i, j) ? trace(i, j) : interior[row++];
  return out;
}

using ScalarCG = Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                          Eigen::Lower | Eigen::Upper,
                                          Eigen::IncompleteCholesky<double>>;

}  // namespace

DecoupledStepper::DecoupledStepper(const Grid2D& grid, MaterialParams params,
                                   MobilityModel mobility, SpinState dirichlet, ScalarField VD,
                                   SolverConfig cfg, const Eigen::Vector3d& m)
    : grid_(grid), params_(std::move(params)), mobility_(std::move(mobility)),
      dirichlet_(std::move(dirichlet)), VD_(std::move(VD)), cfg_(cfg), m_(m) {
  if (std::abs(m_.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("DecoupledStepper: constant unit magnetization required");
  c_plus_ = ScalarField(grid_);
  c_minus_ = ScalarField(grid_);
  c_perp_ = ScalarField(grid_);
  c_plus_.values = params_.D.values / (1.0 + params_.p.values);
  c_minus_.values = params_.D.values / (1.0 - params_.p.values);
  c_perp_.values = params_.D.values / params_.eta.values;
  poisson_ = std::make_shared<DirichletEllipticSolver>(grid_, params_.lambdaD * params_.lambdaD);
}

DiagState DecoupledStepper::diag_dirichlet() const {
  return to_diag_state(dirichlet_, constant_m_field(grid_, m_));
}

DiagState DecoupledStepper::step(const DiagState& prev, double t_before, double dt,
                                 StepReport* report) const {
  const DiagState bc = diag_dirichlet();
  const double inv_tau = params_.inv_tau();
  const double g2 = 2.0 * params_.gamma;

  const Eigen::SparseMatrix<double> Mp = assemble_scalar_matrix(grid_, c_plus_, dt, cfg_.harmonic_faces);
  const Eigen::SparseMatrix<double> Mm = assemble_scalar_matrix(grid_, c_minus_, dt, cfg_.harmonic_faces);
  const Eigen::SparseMatrix<double> Mq = assemble_scalar_matrix(grid_, c_perp_, dt, cfg_.harmonic_faces);
  ScalarCG cgp, cgm, cgq;
  cgp.setTolerance(cfg_.cg_tol);
  cgm.setTolerance(cfg_.cg_tol);
  cgq.setTolerance(cfg_.cg_tol);
  cgp.setMaxIterations(10000);
  cgm.setMaxIterations(10000);
  cgq.setMaxIterations(10000);
  cgp.compute(Mp);
  cgm.compute(Mm);
  cgq.compute(Mq);

  DiagState cur = prev;
  Eigen::VectorXd xp = scalar_interior(cur.n_plus);
  Eigen::VectorXd xm = scalar_interior(cur.n_minus);
  Eigen::VectorXd xq0 = scalar_interior(cur.n_perp.component(0));
  Eigen::VectorXd xq1 = scalar_interior(cur.n_perp.component(1));
  Eigen::VectorXd xq2 = scalar_interior(cur.n_perp.component(2));

  std::vector<double> history;
  bool converged = false;
  int iters = 0;
  double linear_residual = 0.0;
  for (int it = 0; it < cfg_.fp_max; ++it) {
    ScalarField n0(grid_);
    n0.values = 0.5 * (cur.n_plus.values + cur.n_minus.values);
    const ScalarField V = solve_poisson(*poisson_, n0, params_, VD_);
    const FieldSolution field = drift_velocity(V, mobility_);

    ScalarField rp(grid_), rm(grid_);
    rp.values = -0.5 * inv_tau * (cur.n_plus.values - cur.n_minus.values);
    rm.values = -rp.values;
    // transverse reaction 2 gamma n_perp ^ m - n_perp / tau
    Vec3Field rq(grid_);
    for (Eigen::Index k = 0; k < grid_.size(); ++k) {
      const Eigen::Vector3d q = cur.n_perp.values.col(k);
      rq.values.col(k) = g2 * q.cross(m_) - inv_tau * q;
    }

    auto solve_one = [&](ScalarCG& cg, const Eigen::SparseMatrix<double>& M,
                         const ScalarField& pr, const ScalarField& itf, const ScalarField& re,
                         const ScalarField& c, const ScalarField& tr, Eigen::VectorXd& x0) {
      const Eigen::VectorXd rhs =
          scalar_rhs(grid_, pr, itf, re, c, field, dt, tr, cfg_.harmonic_faces);
      Eigen::VectorXd u = cg.solveWithGuess(rhs, x0);
      const double bn = rhs.lpNorm<Eigen::Infinity>();
      const double res = (M * u - rhs).lpNorm<Eigen::Infinity>() / (bn > 0.0 ? bn : 1.0);
      linear_residual = std::max(linear_residual, res);
      if (!(res <= 1e-11))
        throw SolverError("decoupled linear solve missed its residual target", res);
      return u;
    };

    const Eigen::VectorXd up = solve_one(cgp, Mp, prev.n_plus, cur.n_plus, rp, c_plus_, bc.n_plus, xp);
    const Eigen::VectorXd um = solve_one(cgm, Mm, prev.n_minus, cur.n_minus, rm, c_minus_, bc.n_minus, xm);
    const ScalarField q0 = cur.n_perp.component(0), q1 = cur.n_perp.component(1),
                      q2 = cur.n_perp.component(2);
    const ScalarField p0 = prev.n_perp.component(0), p1 = prev.n_perp.component(1),
                      p2 = prev.n_perp.component(2);
    const ScalarField t0 = bc.n_perp.component(0), t1 = bc.n_perp.component(1),
                      t2 = bc.n_perp.component(2);
    const Eigen::VectorXd uq0 = solve_one(cgq, Mq, p0, q0, rq.component(0), c_perp_, t0, xq0);
    const Eigen::VectorXd uq1 = solve_one(cgq, Mq, p1, q1, rq.component(1), c_perp_, t1, xq1);
    const Eigen::VectorXd uq2 = solve_one(cgq, Mq, p2, q2, rq.component(2), c_perp_, t2, xq2);

    const double dn = std::sqrt((up - xp).squaredNorm() + (um - xm).squaredNorm() +
                                (uq0 - xq0).squaredNorm() + (uq1 - xq1).squaredNorm() +
                                (uq2 - xq2).squaredNorm());
    const double xn = std::sqrt(xp.squaredNorm() + xm.squaredNorm() + xq0.squaredNorm() +
                                xq1.squaredNorm() + xq2.squaredNorm());
    const double rel = dn / (1.0 + xn);
    history.push_back(rel);

    const double w = cfg_.damping;
    xp = (1.0 - w) * xp + w * up;
    xm = (1.0 - w) * xm + w * um;
    xq0 = (1.0 - w) * xq0 + w * uq0;
    xq1 = (1.0 - w) * xq1 + w * uq1;
    xq2 = (1.0 - w) * xq2 + w * uq2;

    cur.n_plus = scalar_compose(grid_, xp, bc.n_plus);
    cur.n_minus = scalar_compose(grid_, xm, bc.n_minus);
    cur.n_perp.set_component(0, scalar_compose(grid_, xq0, t0));
    cur.n_perp.set_component(1, scalar_compose(grid_, xq1, t1));
    cur.n_perp.set_component(2, scalar_compose(grid_, xq2, t2));

    iters = it + 1;
    if (rel < cfg_.fp_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw FixedPointError("decoupled step: no convergence within fp_max iterations",
                          std::move(history));
  if (report) {
    report->t = t_before + dt;
    report->h = dt;
    report->fp_iters = iters;
    report->fp_residual = history.back();
    report->linear_residual = linear_residual;
  }
  return cur;
}

DecoupledResult solve_decoupled_constant_m(const DiagState& initial, const Eigen::Vector3d& m,
                                           double T, const DecoupledStepper& stepper,
                                           int snapshot_every) {
  if ((m - stepper.m()).norm() > 1e-14)
    throw std::invalid_argument("solve_decoupled_constant_m: stepper built for a different m");
  if (!(T > 0.0)) throw std::invalid_argument("solve_decoupled_constant_m: T > 0 required");

  const SolverConfig& cfg = stepper.config();
  const int nsteps = std::max(1, static_cast<int>(std::llround(T / cfg.h)));

  DecoupledResult out;
  out.samples.push_back({0.0, initial});
  DiagState s = initial;
  double t = 0.0;

  for (int k = 1; k <= nsteps; ++k) {
    int halvings = 0;
    for (;;) {
      const int nsub = 1 << halvings;
      const double dt = cfg.h / nsub;
      try {
        DiagState s_try = s;
        double t_sub = t;
        std::vector<StepReport> reports;
        for (int sub = 0; sub < nsub; ++sub) {
          StepReport rep;
          s_try = stepper.step(s_try, t_sub, dt, &rep);
          t_sub += dt;
          reports.push_back(rep);
        }
        s = std::move(s_try);
        for (const StepReport& r : reports) out.reports.push_back(r);
        break;
      } catch (const FixedPointError&) {
        if (++halvings > cfg.nonconvergence_retries) throw;
      }
    }
    t = k * cfg.h;
    if (snapshot_every > 0 && (k % snapshot_every == 0 || k == nsteps))
      out.samples.push_back({t, s});
  }
  out.final_state = s;
  return out;
}

namespace {

// Shared discrete ingredients of the diagonalized right-hand sides.
struct DiagWork {
  Grid2D g;
  double h = 0.0;
  double inv_tau = 0.0;
  double gamma = 0.0;
  ScalarField c_plus, c_minus, c_perp, coef_eta2;  // D/(1+p), D/(1-p), D/eta, D/eta^2
  ScalarField p;
  std::array<ScalarField, 4> n;
  std::array<ScalarField, 4> dnx, dny;
  Vec3Field m, m_prev;
  Vec3Field dmx, dmy, lap_m, dt_m;
  bool dt_missing = false;
  ScalarField np_k, nm_k, np_p, nm_p;
  Vec3Field nperp_k, nperp_p;
  ScalarField vx, vy;
  ScalarField n_dot_m;  // spin part against m at t_k
  ScalarField qx, qy;   // n . d_i m
  ScalarField gg;       // sum_{i,s} d_i m_s d_i n_s
};

DiagWork make_diag_work(const SpinState& n_k, const SpinState& n_prev, const Vec3Field& m_k,
                        const Vec3Field* m_prev, const FieldSolution& field,
                        const MaterialParams& params, double h) {
  const Grid2D& g = n_k.grid();
  require_same_grid(g, n_prev.grid(), "diag_residual");
  require_same_grid(g, m_k.grid, "diag_residual");
  if (!(h > 0.0)) throw std::invalid_argument("diag_residual: h > 0 required");

  DiagWork w;
  w.g = g;
  w.h = h;
  w.inv_tau = params.inv_tau();
  w.gamma = params.gamma;

  w.c_plus = ScalarField(g);
  w.c_minus = ScalarField(g);
  w.c_perp = ScalarField(g);
  w.coef_eta2 = ScalarField(g);
  w.c_plus.values = params.D.values / (1.0 + params.p.values);
  w.c_minus.values = params.D.values / (1.0 - params.p.values);
  w.c_perp.values = params.D.values / params.eta.values;
  w.coef_eta2.values = params.D.values / params.eta.values.square();
  w.p = params.p;

  w.n = n_k.n;
  for (int c = 0; c < 4; ++c) {
    auto [gx, gy] = gradient(n_k.n[c]);
    w.dnx[c] = gx;
    w.dny[c] = gy;
  }
  w.m = m_k;
  w.m_prev = m_prev ? *m_prev : m_k;
  w.dt_missing = (m_prev == nullptr);
  w.dmx = Vec3Field(g);
  w.dmy = Vec3Field(g);
  for (int k = 0; k < 3; ++k) {
    auto [gx, gy] = gradient(m_k.component(k));
    w.dmx.set_component(k, gx);
    w.dmy.set_component(k, gy);
  }
  w.lap_m = laplacian_neumann(m_k);
  w.dt_m = Vec3Field(g);
  if (m_prev) w.dt_m.values = (m_k.values - m_prev->values) / h;

  const DiagState dk = to_diag_state(n_k, m_k);
  const DiagState dp = to_diag_state(n_prev, w.m_prev);
  w.np_k = dk.n_plus;
  w.nm_k = dk.n_minus;
  w.nperp_k = dk.n_perp;
  w.np_p = dp.n_plus;
  w.nm_p = dp.n_minus;
  w.nperp_p = dp.n_perp;

  w.vx = field.vx;
  w.vy = field.vy;

  w.n_dot_m = ScalarField(g);
  w.qx = ScalarField(g);
  w.qy = ScalarField(g);
  w.gg = ScalarField(g);
  for (int s = 0; s < 3; ++s) {
    w.n_dot_m.values += w.n[s + 1].values * w.m.values.row(s).transpose().array();
    w.qx.values += w.n[s + 1].values * w.dmx.values.row(s).transpose().array();
    w.qy.values += w.n[s + 1].values * w.dmy.values.row(s).transpose().array();
    w.gg.values += w.dnx[s + 1].values * w.dmx.values.row(s).transpose().array() +
                   w.dny[s + 1].values * w.dmy.values.row(s).transpose().array();
  }
  return w;
}

// Parabolic left-hand side (d/dt - div(c(grad - v)) [+ u/tau]) of one scalar.
ScalarField diag_lhs(const DiagWork& w, const ScalarField& u_k, const ScalarField& u_p,
                     const ScalarField& c, double reaction_rate) {
  auto [ux, uy] = gradient(u_k);
  ScalarField Fx(w.g), Fy(w.g);
  Fx.values = c.values * (ux.values - w.vx.values * u_k.values);
  Fy.values = c.values * (uy.values - w.vy.values * u_k.values);
  const ScalarField dv = divergence(Fx, Fy);
  ScalarField out(w.g);
  out.values = (u_k.values - u_p.values) / w.h - dv.values + reaction_rate * u_k.values;
  return out;
}

// n . dm/dt with the backward difference.
ScalarField spin_dot_dtm(const DiagWork& w) {
  ScalarField s1(w.g);
  for (int s = 0; s < 3; ++s)
    s1.values += w.n[s + 1].values * w.dt_m.values.row(s).transpose().array();
  return s1;
}

}  // namespace

DiagResidual diag_residual(const SpinState& n_k, const SpinState& n_prev, const Vec3Field& m_k,
                           const Vec3Field* m_prev, const FieldSolution& field,
                           const MaterialParams& params, double h) {
  const DiagWork w = make_diag_work(n_k, n_prev, m_k, m_prev, field, params, h);
  const Grid2D& g = w.g;

  DiagResidual res;
  res.dt_m_missing = w.dt_missing;
  res.r_plus = ScalarField(g);
  res.r_minus = ScalarField(g);
  res.r_perp = Vec3Field(g);

  // n+/n- equations: lhs - (+- n.dtm -+ div(c q) -+ c_perp(gg - v.q) -+ (n.m)/tau)
  const ScalarField s1 = spin_dot_dtm(w);
  ScalarField t3(g);
  t3.values = w.c_perp.values * (w.gg.values - w.vx.values * w.qx.values - w.vy.values * w.qy.values);
  ScalarField t4(g);
  t4.values = w.n_dot_m.values * w.inv_tau;

  for (int sign = 0; sign < 2; ++sign) {
    const double sg = sign == 0 ? 1.0 : -1.0;
    const ScalarField& c = sign == 0 ? w.c_plus : w.c_minus;
    ScalarField Gx(g), Gy(g);
    Gx.values = c.values * w.qx.values;
    Gy.values = c.values * w.qy.values;
    const ScalarField divG = divergence(Gx, Gy);
    ScalarField rhs(g);
    rhs.values = sg * (s1.values - divG.values - t3.values - t4.values);
    const ScalarField lhs = diag_lhs(w, sign == 0 ? w.np_k : w.nm_k,
                                     sign == 0 ? w.np_p : w.nm_p, c, 0.0);
    (sign == 0 ? res.r_plus : res.r_minus).values = lhs.values - rhs.values;
  }

  // transverse equation
  // current fluxes J_0, J_s and their contractions against grad m
  ScalarField J0x(g), J0y(g);
  J0x.values = w.dnx[0].values - w.vx.values * w.n[0].values;
  J0y.values = w.dny[0].values - w.vy.values * w.n[0].values;
  ScalarField mJx(g), mJy(g), Jdm(g);
  for (int s = 0; s < 3; ++s) {
    const auto ms = w.m.values.row(s).transpose().array();
    const Eigen::ArrayXd Jsx = w.dnx[s + 1].values - w.vx.values * w.n[s + 1].values;
    const Eigen::ArrayXd Jsy = w.dny[s + 1].values - w.vy.values * w.n[s + 1].values;
    mJx.values += ms * Jsx;
    mJy.values += ms * Jsy;
    Jdm.values += Jsx * w.dmx.values.row(s).transpose().array() +
                  Jsy * w.dmy.values.row(s).transpose().array();
  }
  ScalarField ndm_prev(g);  // n(t_k) . m(t_{k-1}), for the discrete product rule
  for (int s = 0; s < 3; ++s)
    ndm_prev.values += w.n[s + 1].values * w.m_prev.values.row(s).transpose().array();

  for (int k = 0; k < 3; ++k) {
    const auto mk = w.m.values.row(k).transpose().array();
    const auto dmxk = w.dmx.values.row(k).transpose().array();
    const auto dmyk = w.dmy.values.row(k).transpose().array();

    ScalarField Px(g), Py(g);
    Px.values = w.c_perp.values * (mk * w.qx.values + w.n_dot_m.values * dmxk);
    Py.values = w.c_perp.values * (mk * w.qy.values + w.n_dot_m.values * dmyk);
    const ScalarField T1 = divergence(Px, Py);

    ScalarField T2(g);
    T2.values = -w.coef_eta2.values *
                    ((w.p.values * J0x.values - mJx.values) * dmxk +
                     (w.p.values * J0y.values - mJy.values) * dmyk) +
                w.c_perp.values * mk * Jdm.values;

    ScalarField T3(g);
    T3.values = -(mk * s1.values + ndm_prev.values * w.dt_m.values.row(k).transpose().array());

    // 2 gamma (n ^ m)_k
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    ScalarField T4(g);
    T4.values = 2.0 * w.gamma *
                (w.n[a + 1].values * w.m.values.row(b).transpose().array() -
                 w.n[b + 1].values * w.m.values.row(a).transpose().array());

    const ScalarField lhs = diag_lhs(w, w.nperp_k.component(k), w.nperp_p.component(k), w.c_perp,
                                     w.inv_tau);
    ScalarField rk(g);
    rk.values = lhs.values - (T1.values + T2.values + T3.values + T4.values);
    res.r_perp.set_component(k, rk);
  }
  return res;
}

double DiagResidual::interior_linf(int margin) const {
  const Grid2D& g = r_plus.grid;
  margin = std::max(1, margin);
  double m = 0.0;
  for (int j = margin; j < g.ny - margin; ++j)
    for (int i = margin; i < g.nx - margin; ++i) {
      m = std::max(m, std::abs(r_plus(i, j)));
      m = std::max(m, std::abs(r_minus(i, j)));
      for (int k = 0; k < 3; ++k) m = std::max(m, std::abs(r_perp(i, j)[k]));
    }
  return m;
}

SourceBoundReport source_bound_check(const SpinState& n_k, const SpinState& n_prev,
                                     const Vec3Field& m_k, const Vec3Field* m_prev,
                                     const FieldSolution& field, const MaterialParams& params,
                                     double h) {
  const DiagWork w = make_diag_work(n_k, n_prev, m_k, m_prev, field, params, h);
  const Grid2D& g = w.g;
  const Eigen::Index N = g.size();

  // pointwise magnitude fields entering the dominating function
  Eigen::ArrayXd n_mag = Eigen::ArrayXd::Zero(N), grad_n = Eigen::ArrayXd::Zero(N);
  for (int c = 0; c < 4; ++c) {
    n_mag += w.n[c].values.square();
    grad_n += w.dnx[c].values.square() + w.dny[c].values.square();
  }
  n_mag = n_mag.sqrt();
  grad_n = grad_n.sqrt();
  Eigen::ArrayXd grad_m = Eigen::ArrayXd::Zero(N);
  for (int s = 0; s < 3; ++s)
    grad_m += w.dmx.values.row(s).transpose().array().square() +
              w.dmy.values.row(s).transpose().array().square();
  grad_m = grad_m.sqrt();
  const Eigen::ArrayXd lap_m = w.lap_m.values.colwise().norm().transpose().array();
  const Eigen::ArrayXd dt_m = w.dt_m.values.colwise().norm().transpose().array();
  const Eigen::ArrayXd vmag = (w.vx.values.square() + w.vy.values.square()).sqrt();
  const double vs = vmag.maxCoeff();

  // coefficient bounds and their discrete gradients
  const double Kp = w.c_plus.values.maxCoeff();
  const double Km = w.c_minus.values.maxCoeff();
  const double Kq = w.c_perp.values.maxCoeff();
  const double Kpm = std::max(Kp, Km);
  auto grad_sup = [](const ScalarField& f) {
    auto [gx, gy] = gradient(f);
    return (gx.values.square() + gy.values.square()).sqrt().maxCoeff();
  };
  const double Gpm = std::max(grad_sup(w.c_plus), grad_sup(w.c_minus));
  const double Gq = grad_sup(w.c_perp);
  const double KJ = (w.coef_eta2.values * (w.p.values.abs() + 1.0)).maxCoeff();

  // slot coefficients against |n||dtm|, |n||Lap m|, |n||grad m|^2, |n|, |grad n||grad m|;
  // the |n||grad m| cross terms are split as |n||grad m| <= (|n||grad m|^2 + |n|)/2
  const double inv_tau = w.inv_tau;
  const double pm_dt = 1.0;
  const double pm_lap = Kpm;
  const double pm_g2 = 0.5 * (Gpm + Kq * vs);
  const double pm_one = 0.5 * (Gpm + Kq * vs) + inv_tau;
  const double pm_f2 = Kpm + Kq;

  const double pp_dt = 2.0;
  const double pp_lap = 2.0 * Kq;
  const double pp_g2 = Gq + 2.0 * Kq + 0.5 * (KJ + Kq) * vs;
  const double pp_one = Gq + 0.5 * (KJ + Kq) * vs + 2.0 * params.gamma;
  const double pp_f2 = 3.0 * Kq + KJ;

  SourceBoundReport rep;
  rep.c = std::max({pm_dt, pm_lap, pm_g2, pm_one, pm_f2, pp_dt, pp_lap, pp_g2, pp_one, pp_f2});

  const Eigen::ArrayXd bound =
      rep.c * (n_mag * (dt_m + lap_m + grad_m.square() + 1.0) + grad_n * grad_m);

  // split-form sources (calculus expanded so every piece obeys its bound
  // as exact pointwise algebra on the discrete fields)
  const ScalarField s1 = spin_dot_dtm(w);
  Eigen::ArrayXd ndLap = Eigen::ArrayXd::Zero(N);  // n . Lap m
  for (int s = 0; s < 3; ++s)
    ndLap += w.n[s + 1].values * w.lap_m.values.row(s).transpose().array();

  auto grad_of = [](const ScalarField& f) { return gradient(f); };
  auto [dcpx, dcpy] = grad_of(w.c_plus);
  auto [dcmx, dcmy] = grad_of(w.c_minus);
  auto [dcqx, dcqy] = grad_of(w.c_perp);

  const Eigen::ArrayXd t3 =
      w.c_perp.values * (w.gg.values - w.vx.values * w.qx.values - w.vy.values * w.qy.values);
  const Eigen::ArrayXd t4 = w.n_dot_m.values * inv_tau;

  const Eigen::ArrayXd div_p =
      dcpx.values * w.qx.values + dcpy.values * w.qy.values + w.c_plus.values * (w.gg.values + ndLap);
  const Eigen::ArrayXd div_m =
      dcmx.values * w.qx.values + dcmy.values * w.qy.values + w.c_minus.values * (w.gg.values + ndLap);
  const Eigen::ArrayXd f_plus = s1.values - div_p - t3 - t4;
  const Eigen::ArrayXd f_minus = -(s1.values - div_m - t3 - t4);

  // transverse source, split form
  ScalarField J0x(g), J0y(g);
  J0x.values = w.dnx[0].values - w.vx.values * w.n[0].values;
  J0y.values = w.dny[0].values - w.vy.values * w.n[0].values;
  ScalarField mJx(g), mJy(g), Jdm(g), dn_m_x(g), dn_m_y(g), ndm_prev(g);
  for (int s = 0; s < 3; ++s) {
    const auto ms = w.m.values.row(s).transpose().array();
    const Eigen::ArrayXd Jsx = w.dnx[s + 1].values - w.vx.values * w.n[s + 1].values;
    const Eigen::ArrayXd Jsy = w.dny[s + 1].values - w.vy.values * w.n[s + 1].values;
    mJx.values += ms * Jsx;
    mJy.values += ms * Jsy;
    Jdm.values += Jsx * w.dmx.values.row(s).transpose().array() +
                  Jsy * w.dmy.values.row(s).transpose().array();
    dn_m_x.values += w.dnx[s + 1].values * ms;
    dn_m_y.values += w.dny[s + 1].values * ms;
    ndm_prev.values += w.n[s + 1].values * w.m_prev.values.row(s).transpose().array();
  }

  std::array<Eigen::ArrayXd, 3> f_perp;
  for (int k = 0; k < 3; ++k) {
    const auto mk = w.m.values.row(k).transpose().array();
    const auto dmxk = w.dmx.values.row(k).transpose().array();
    const auto dmyk = w.dmy.values.row(k).transpose().array();
    const auto lapk = w.lap_m.values.row(k).transpose().array();

    const Eigen::ArrayXd T1 =
        dcqx.values * (mk * w.qx.values + w.n_dot_m.values * dmxk) +
        dcqy.values * (mk * w.qy.values + w.n_dot_m.values * dmyk) +
        w.c_perp.values *
            (dmxk * w.qx.values + dmyk * w.qy.values + mk * (w.gg.values + ndLap) +
             (dn_m_x.values + w.qx.values) * dmxk + (dn_m_y.values + w.qy.values) * dmyk +
             w.n_dot_m.values * lapk);
    const Eigen::ArrayXd T2 =
        -w.coef_eta2.values * ((w.p.values * J0x.values - mJx.values) * dmxk +
                               (w.p.values * J0y.values - mJy.values) * dmyk) +
        w.c_perp.values * mk * Jdm.values;
    const Eigen::ArrayXd T3 =
        -(mk * s1.values + ndm_prev.values * w.dt_m.values.row(k).transpose().array());
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    const Eigen::ArrayXd T4 = 2.0 * w.gamma *
                              (w.n[a + 1].values * w.m.values.row(b).transpose().array() -
                               w.n[b + 1].values * w.m.values.row(a).transpose().array());
    f_perp[k] = T1 + T2 + T3 + T4;
  }

  double max_ratio = 0.0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      const Eigen::Index k = g.idx(i, j);
      double f = std::max(std::abs(f_plus[k]), std::abs(f_minus[k]));
      for (int c = 0; c < 3; ++c) f = std::max(f, std::abs(f_perp[c][k]));
      if (f < 1e-300 && bound[k] < 1e-300) continue;
      max_ratio = std::max(max_ratio, f / std::max(bound[k], 1e-300));
    }
  rep.max_ratio = max_ratio;
  rep.dominated = max_ratio <= 1.0 + 1e-9;
  return rep;
}

}  // namespace spindrift
