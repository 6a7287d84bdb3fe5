#include "spindrift/field_solver.hpp"

#include "spindrift/stencil.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <vector>

namespace spindrift {

namespace {
constexpr Eigen::Index kDirectLimit = 100000;  // nodes; above this, use CG
}

struct DirichletEllipticSolver::Impl {
  Eigen::SparseMatrix<double> M;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  double coeff = 1.0;
  bool direct = true;
};

DirichletEllipticSolver::DirichletEllipticSolver(const Grid2D& grid, double coeff,
                                                 const ScalarField* q)
    : impl_(std::make_unique<Impl>()), grid_(grid) {
  if (!(coeff > 0.0)) throw std::invalid_argument("DirichletEllipticSolver: coeff > 0 required");
  if (q) require_same_grid(q->grid, grid, "DirichletEllipticSolver");
  impl_->coeff = coeff;

  const int nx = grid.nx, ny = grid.ny;
  const double cx = coeff / (grid.hx() * grid.hx());
  const double cy = coeff / (grid.hy() * grid.hy());
  const int nix = nx - 2, niy = ny - 2;
  const Eigen::Index n = static_cast<Eigen::Index>(nix) * niy;
  auto iidx = [nix](int i, int j) { return static_cast<Eigen::Index>(j - 1) * nix + (i - 1); };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const Eigen::Index row = iidx(i, j);
      double diag = 2.0 * cx + 2.0 * cy;
      if (q) diag += q->operator()(i, j);
      trip.emplace_back(row, row, diag);
      if (i > 1) trip.emplace_back(row, iidx(i - 1, j), -cx);
      if (i < nx - 2) trip.emplace_back(row, iidx(i + 1, j), -cx);
      if (j > 1) trip.emplace_back(row, iidx(i, j - 1), -cy);
      if (j < ny - 2) trip.emplace_back(row, iidx(i, j + 1), -cy);
    }
  impl_->M.resize(n, n);
  impl_->M.setFromTriplets(trip.begin(), trip.end());
  impl_->direct = grid.size() <= kDirectLimit;
  if (impl_->direct) {
    impl_->ldlt.compute(impl_->M);
    if (impl_->ldlt.info() != Eigen::Success)
      throw SolverError("DirichletEllipticSolver: factorization failed", 0.0);
  } else {
    impl_->cg.setTolerance(1e-12);
    impl_->cg.setMaxIterations(20000);
    impl_->cg.compute(impl_->M);
  }
}

DirichletEllipticSolver::~DirichletEllipticSolver() = default;
DirichletEllipticSolver::DirichletEllipticSolver(DirichletEllipticSolver&&) noexcept = default;
DirichletEllipticSolver& DirichletEllipticSolver::operator=(DirichletEllipticSolver&&) noexcept =
    default;

ScalarField DirichletEllipticSolver::solve(const ScalarField& rhs, const ScalarField& trace) const {
  require_same_grid(rhs.grid, grid_, "DirichletEllipticSolver::solve");
  require_same_grid(trace.grid, grid_, "DirichletEllipticSolver::solve");
  const int nx = grid_.nx, ny = grid_.ny;
  const double cx = impl_->coeff / (grid_.hx() * grid_.hx());
  const double cy = impl_->coeff / (grid_.hy() * grid_.hy());
  const int nix = nx - 2;
  auto iidx = [nix](int i, int j) { return static_cast<Eigen::Index>(j - 1) * nix + (i - 1); };

  Eigen::VectorXd b(impl_->M.rows());
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      double v = rhs(i, j);
      if (i == 1) v += cx * trace(0, j);
      if (i == nx - 2) v += cx * trace(nx - 1, j);
      if (j == 1) v += cy * trace(i, 0);
      if (j == ny - 2) v += cy * trace(i, ny - 1);
      b[iidx(i, j)] = v;
    }

  Eigen::VectorXd x;
  if (impl_->direct) {
    x = impl_->ldlt.solve(b);
  } else {
    x = impl_->cg.solve(b);
  }
  const double bnorm = b.lpNorm<Eigen::Infinity>();
  last_residual_ =
      (impl_->M * x - b).lpNorm<Eigen::Infinity>() / (bnorm > 0.0 ? bnorm : 1.0);
  if (!(last_residual_ <= 1e-10))
    throw SolverError("elliptic solve did not reach relative residual 1e-10", last_residual_);

  ScalarField out(grid_);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out(i, j) = grid_.is_boundary(i, j) ? trace(i, j) : x[iidx(i, j)];
  return out;
}

ScalarField solve_poisson(const DirichletEllipticSolver& poisson, const ScalarField& n0,
                          const MaterialParams& params, const ScalarField& VD) {
  require_same_grid(n0.grid, params.C.grid, "solve_poisson");
  if (!n0.all_finite()) throw std::invalid_argument("solve_poisson: n0 must be finite");
  ScalarField rhs(n0.grid);
  rhs.values = 2.0 * n0.values - params.C.values;
  return poisson.solve(rhs, VD);
}

ScalarField solve_poisson(const ScalarField& n0, const MaterialParams& params,
                          const ScalarField& VD) {
  DirichletEllipticSolver poisson(n0.grid, params.lambdaD * params.lambdaD);
  return solve_poisson(poisson, n0, params, VD);
}

FieldSolution drift_velocity(const ScalarField& V, const MobilityModel& model) {
  FieldSolution sol;
  sol.V = V;
  auto [gx, gy] = gradient(V);
  sol.dVdx = gx;
  sol.dVdy = gy;
  sol.vx = ScalarField(V.grid);
  sol.vy = ScalarField(V.grid);
  for (Eigen::Index k = 0; k < V.grid.size(); ++k) {
    const double s = std::hypot(gx.values[k], gy.values[k]);
    const double mu = model.mu(s);
    sol.vx.values[k] = -mu * gx.values[k];
    sol.vy.values[k] = -mu * gy.values[k];
  }
  return sol;
}

}  // namespace spindrift
