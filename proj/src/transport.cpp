#include "spindrift/transport.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>

namespace spindrift {

MatrixField assemble_A_field(const MaterialParams& params, const Vec3Field& m) {
  require_same_grid(params.D.grid, m.grid, "assemble_A_field");
  MatrixField a(m.grid.size());
  for (Eigen::Index k = 0; k < m.grid.size(); ++k) {
    const Eigen::Vector3d mv = m.values.col(k);
    a[k] = assemble_diffusion_matrix(params.D.values[k], params.p.values[k], mv);
  }
  return a;
}

MatrixField assemble_B_field(const MaterialParams& params, const Vec3Field& m) {
  require_same_grid(params.D.grid, m.grid, "assemble_B_field");
  MatrixField b(m.grid.size());
  for (Eigen::Index k = 0; k < m.grid.size(); ++k) {
    const Eigen::Vector3d mv = m.values.col(k);
    b[k] = assemble_reaction_matrix(params.gamma, params.tau, mv);
  }
  return b;
}

namespace {

inline Eigen::Matrix4d face_average(const Eigen::Matrix4d& ap, const Eigen::Matrix4d& aq,
                                    bool harmonic) {
  if (!harmonic) return 0.5 * (ap + aq);
  return 2.0 * (ap.inverse() + aq.inverse()).inverse();
}

inline Eigen::Vector4d state_at(const SpinState& s, Eigen::Index k) {
  return {s.n[0].values[k], s.n[1].values[k], s.n[2].values[k], s.n[3].values[k]};
}

}  // namespace

Eigen::VectorXd interior_vector(const SpinState& s) {
  const Grid2D& g = s.grid();
  const int nix = g.nx - 2, niy = g.ny - 2;
  Eigen::VectorXd v(4 * static_cast<Eigen::Index>(nix) * niy);
  Eigen::Index row = 0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      const Eigen::Index k = g.idx(i, j);
      for (int c = 0; c < 4; ++c) v[row++] = s.n[c].values[k];
    }
  return v;
}

SpinState compose_state(const Grid2D& g, const Eigen::VectorXd& interior,
                        const SpinState& dirichlet) {
  SpinState out(g);
  Eigen::Index row = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Eigen::Index k = g.idx(i, j);
      if (g.is_boundary(i, j)) {
        for (int c = 0; c < 4; ++c) out.n[c].values[k] = dirichlet.n[c].values[k];
      } else {
        for (int c = 0; c < 4; ++c) out.n[c].values[k] = interior[row++];
      }
    }
  return out;
}

namespace {

// right-hand side n_prev - h div(a n v) + h B n plus Dirichlet lifting
Eigen::VectorXd step_rhs(const SpinState& n_prev, const SpinState& n_iter,
                         const FieldSolution& field, const MatrixField& a, const MatrixField& b,
                         double h, const SpinState& dirichlet, bool harmonic_faces) {
  const Grid2D& g = n_prev.grid();
  const int nx = g.nx, ny = g.ny, nix = nx - 2, niy = ny - 2;
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const double i2hx = 1.0 / (2.0 * g.hx());
  const double i2hy = 1.0 / (2.0 * g.hy());
  auto iidx = [nix](int i, int j) { return 4 * (static_cast<Eigen::Index>(j - 1) * nix + (i - 1)); };

  std::vector<Eigen::Vector4d> wx(g.size()), wy(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const Eigen::Vector4d an = a[k] * state_at(n_iter, k);
    wx[k] = field.vx.values[k] * an;
    wy[k] = field.vy.values[k] * an;
  }

  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4 * static_cast<Eigen::Index>(nix) * niy);
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const Eigen::Index row = iidx(i, j);
      const Eigen::Index kp = g.idx(i, j);
      Eigen::Vector4d r = state_at(n_prev, kp);
      r -= h * ((wx[g.idx(i + 1, j)] - wx[g.idx(i - 1, j)]) * i2hx +
                (wy[g.idx(i, j + 1)] - wy[g.idx(i, j - 1)]) * i2hy);
      r += h * (b[kp] * state_at(n_iter, kp));
      for (int d = 0; d < 4; ++d) {
        const int qi = i + di[d], qj = j + dj[d];
        if (!g.is_boundary(qi, qj)) continue;
        const Eigen::Index kq = g.idx(qi, qj);
        const double w = h * (dj[d] == 0 ? ihx2 : ihy2);
        r += w * face_average(a[kp], a[kq], harmonic_faces) * state_at(dirichlet, kq);
      }
      rhs.segment<4>(row) = r;
    }
  return rhs;
}

Eigen::SparseMatrix<double> step_matrix(const Grid2D& g, const MatrixField& a, double h,
                                        bool harmonic_faces) {
  const int nx = g.nx, ny = g.ny, nix = nx - 2, niy = ny - 2;
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  auto iidx = [nix](int i, int j) { return 4 * (static_cast<Eigen::Index>(j - 1) * nix + (i - 1)); };

  std::vector<Eigen::Triplet<double>> trip;
  const Eigen::Index nunk = 4 * static_cast<Eigen::Index>(nix) * niy;
  trip.reserve(nunk * 20);
  auto add_block = [&trip](Eigen::Index r, Eigen::Index c, const Eigen::Matrix4d& blk) {
    for (int ii = 0; ii < 4; ++ii)
      for (int jj = 0; jj < 4; ++jj)
        if (blk(ii, jj) != 0.0) trip.emplace_back(r + ii, c + jj, blk(ii, jj));
  };
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const Eigen::Index row = iidx(i, j);
      const Eigen::Index kp = g.idx(i, j);
      Eigen::Matrix4d diag = Eigen::Matrix4d::Identity();
      for (int d = 0; d < 4; ++d) {
        const int qi = i + di[d], qj = j + dj[d];
        const Eigen::Matrix4d af = h * (dj[d] == 0 ? ihx2 : ihy2) *
                                   face_average(a[kp], a[g.idx(qi, qj)], harmonic_faces);
        diag += af;
        if (!g.is_boundary(qi, qj)) add_block(row, iidx(qi, qj), -af);
      }
      add_block(row, row, diag);
    }
  Eigen::SparseMatrix<double> M(nunk, nunk);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace

StepSystem assemble_step_system(const SpinState& n_prev, const SpinState& n_iter,
                                const FieldSolution& field, const MatrixField& a,
                                const MatrixField& b, double h, const SpinState& dirichlet,
                                bool harmonic_faces) {
  const Grid2D& g = n_prev.grid();
  require_same_grid(g, n_iter.grid(), "assemble_step_system");
  if (!(h > 0.0)) throw std::invalid_argument("assemble_step_system: h > 0 required");
  StepSystem sys;
  sys.nix = g.nx - 2;
  sys.niy = g.ny - 2;
  sys.matrix = step_matrix(g, a, h, harmonic_faces);
  sys.rhs = step_rhs(n_prev, n_iter, field, a, b, h, dirichlet, harmonic_faces);
  return sys;
}

TransportStepper::TransportStepper(const Grid2D& grid, MaterialParams params,
                                   MobilityModel mobility, SpinState dirichlet, ScalarField VD,
                                   SolverConfig cfg)
    : grid_(grid), params_(std::move(params)), mobility_(std::move(mobility)),
      dirichlet_(std::move(dirichlet)), VD_(std::move(VD)), cfg_(cfg) {
  require_same_grid(grid_, params_.D.grid, "TransportStepper");
  require_same_grid(grid_, dirichlet_.grid(), "TransportStepper");
  require_same_grid(grid_, VD_.grid, "TransportStepper");
  if (!(cfg_.h > 0.0)) throw std::invalid_argument("TransportStepper: h > 0 required");
  if (!(cfg_.fp_tol > 0.0)) throw std::invalid_argument("TransportStepper: fp_tol > 0 required");
  if (!(cfg_.damping > 0.0 && cfg_.damping <= 1.0))
    throw std::invalid_argument("TransportStepper: damping must lie in (0, 1]");
  poisson_ = std::make_shared<DirichletEllipticSolver>(grid_, params_.lambdaD * params_.lambdaD);
}

double TransportStepper::entropy_c0() const {
  if (cfg_.entropy_c0 >= 0.0) return cfg_.entropy_c0;
  return params_.min_D() / (1.0 + params_.max_abs_p());
}

StepOutcome TransportStepper::step(const SpinState& n_prev, const Vec3Field& m_end,
                                   double t_before) const {
  return step(n_prev, m_end, t_before, cfg_.h);
}

struct TransportStepper::MatrixCache {
  Eigen::Matrix3Xd m_values;
  double dt = 0.0;
  MatrixField a, b;
  Eigen::SparseMatrix<double> M;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  bool matrix_ready = false;
};

StepOutcome TransportStepper::step(const SpinState& n_prev, const Vec3Field& m_end,
                                   double t_before, double dt) const {
  require_same_grid(n_prev.grid(), grid_, "TransportStepper::step");
  require_same_grid(m_end.grid, grid_, "TransportStepper::step");

  // The matrix depends only on the end-of-interval magnetization and dt, so
  // it is fixed across Picard iterations and across steps of frozen-m runs.
  auto& cache = const_cast<std::shared_ptr<MatrixCache>&>(cache_);
  if (!cache || cache->dt != dt || cache->m_values.cols() != m_end.values.cols() ||
      cache->m_values != m_end.values) {
    cache = std::make_shared<MatrixCache>();
    cache->m_values = m_end.values;
    cache->dt = dt;
    cache->a = assemble_A_field(params_, m_end);
    cache->b = assemble_B_field(params_, m_end);
    cache->cg.setTolerance(cfg_.cg_tol);
    cache->cg.setMaxIterations(10000);
  }
  const MatrixField& a = cache->a;
  const MatrixField& b = cache->b;
  Eigen::SparseMatrix<double>& M = cache->M;
  auto& cg = cache->cg;
  bool& matrix_ready = cache->matrix_ready;

  SpinState n_cur = n_prev;
  FieldSolution field;
  Eigen::VectorXd x = interior_vector(n_cur);

  StepReport report;
  report.h = dt;
  report.t = t_before + dt;
  report.entropy_before = entropy(n_prev, dirichlet_);

  std::vector<double> history;
  bool converged = false;
  for (int it = 0; it < cfg_.fp_max; ++it) {
    const ScalarField V = solve_poisson(*poisson_, n_cur.n[0], params_, VD_);
    field = drift_velocity(V, mobility_);

    if (!matrix_ready) {
      M = step_matrix(grid_, a, dt, cfg_.harmonic_faces);
      cg.compute(M);
      matrix_ready = true;
    }
    const Eigen::VectorXd rhs =
        step_rhs(n_prev, n_cur, field, a, b, dt, dirichlet_, cfg_.harmonic_faces);
    const Eigen::VectorXd u = cg.solveWithGuess(rhs, x);
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    report.linear_residual =
        (M * u - rhs).lpNorm<Eigen::Infinity>() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
    if (!(report.linear_residual <= 1e-11))
      throw SolverError("transport linear solve missed its residual target",
                        report.linear_residual);

    const double rel = (u - x).norm() / (1.0 + x.norm());
    history.push_back(rel);
    x = (1.0 - cfg_.damping) * x + cfg_.damping * u;
    n_cur = compose_state(grid_, x, dirichlet_);
    report.fp_iters = it + 1;
    report.fp_residual = rel;
    if (rel < cfg_.fp_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw FixedPointError("fixed_point_step: no convergence within fp_max iterations",
                          std::move(history));

  // re-derive the field from the converged density for a consistent output
  const ScalarField V = solve_poisson(*poisson_, n_cur.n[0], params_, VD_);
  field = drift_velocity(V, mobility_);

  report.entropy_after = entropy(n_cur, dirichlet_);
  report.entropy_dissipation = entropy_dissipation(n_cur);
  const double c0 = entropy_c0();
  report.inequality_slack = cfg_.entropy_c * (report.entropy_after + 1.0) -
                            (report.entropy_after - report.entropy_before) / dt -
                            c0 * report.entropy_dissipation;
  report.min_n0 = n_cur.n[0].values.minCoeff();
  report.mass = n_cur.n[0].values.sum() * grid_.hx() * grid_.hy();
  report.vmax = (field.vx.values.square() + field.vy.values.square()).sqrt().maxCoeff();

  return {std::move(n_cur), std::move(field), report};
}

StepOutcome fixed_point_step(const SpinState& n_prev, const Vec3Field& m, const SolverConfig& cfg,
                             const MaterialParams& params, const MobilityModel& mobility,
                             const SpinState& dirichlet, const ScalarField& VD, double t_before) {
  TransportStepper stepper(n_prev.grid(), params, mobility, dirichlet, VD, cfg);
  return stepper.step(n_prev, m, t_before);
}

namespace {

/// Advance the magnetization by dt, sub-stepping under the parabolic cap.
Magnetization advance_llg(const Magnetization& m, double dt, double cap_factor) {
  const double cap = llg_dt_cap(m.grid(), cap_factor);
  const int nsub = std::max(1, static_cast<int>(std::ceil(dt / cap - 1e-12)));
  Magnetization cur = m;
  const double sub = dt / nsub;
  for (int s = 0; s < nsub; ++s) cur = llg_step(cur, sub, cap_factor);
  return cur;
}

}  // namespace

TransientResult run_transient(const SpinState& initial, const Magnetization& m0, bool frozen_m,
                              double T, const TransportStepper& stepper, int snapshot_every,
                              const std::function<void(const StepReport&)>& on_step,
                              const StateObserver& on_state) {
  if (!(T > 0.0)) throw std::invalid_argument("run_transient: T > 0 required");
  const SolverConfig& cfg = stepper.config();
  const int nsteps = std::max(1, static_cast<int>(std::llround(T / cfg.h)));

  TransientResult out;
  out.samples.push_back({0.0, initial, m0.m});

  SpinState n = initial;
  Magnetization m = m0;
  double t = 0.0;

  for (int k = 1; k <= nsteps; ++k) {
    const Magnetization m_prev = m;

    // one transport interval; on Picard failure retry on halved sub-steps
    int halvings = 0;
    for (;;) {
      const int nsub = 1 << halvings;
      const double dt = cfg.h / nsub;
      try {
        SpinState n_try = n;
        Magnetization m_try = m_prev;
        double t_sub = t;
        std::vector<StepReport> reports;
        for (int s = 0; s < nsub; ++s) {
          if (!frozen_m) m_try = advance_llg(m_try, dt, cfg.llg_dt_cap_factor);
          StepOutcome res = stepper.step(n_try, m_try.m, t_sub, dt);
          t_sub += dt;
          n_try = std::move(res.state);
          reports.push_back(res.report);
        }
        n = std::move(n_try);
        m = std::move(m_try);
        for (const StepReport& r : reports) {
          out.reports.push_back(r);
          if (on_step) on_step(r);
        }
        if (on_state) on_state(t + cfg.h, n, m.m);
        break;
      } catch (const FixedPointError&) {
        if (++halvings > cfg.nonconvergence_retries) throw;
      }
    }

    t = k * cfg.h;
    if (snapshot_every > 0 && (k % snapshot_every == 0 || k == nsteps))
      out.samples.push_back({t, n, m.m});
  }

  out.final_state = n;
  out.final_m = m;
  return out;
}

}  // namespace spindrift
