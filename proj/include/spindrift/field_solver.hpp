#ifndef SPINDRIFT_FIELD_SOLVER_HPP
#define SPINDRIFT_FIELD_SOLVER_HPP

#include "spindrift/grid.hpp"
#include "spindrift/materials.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

#include <memory>
#include <stdexcept>

namespace spindrift {

/// A linear solve failed to reach its residual target.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, double residual)
      : std::runtime_error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Sparse operator (-coeff * Laplacian_5pt + q) on interior nodes with
/// Dirichlet boundary values eliminated into the right-hand side.
/// Direct factorization up to 1e5 nodes, conjugate gradients above.
class DirichletEllipticSolver {
 public:
  DirichletEllipticSolver(const Grid2D& grid, double coeff, const ScalarField* q = nullptr);
  ~DirichletEllipticSolver();
  DirichletEllipticSolver(DirichletEllipticSolver&&) noexcept;
  DirichletEllipticSolver& operator=(DirichletEllipticSolver&&) noexcept;

  /// Solve with interior right-hand side `rhs` (read at interior nodes) and
  /// Dirichlet trace (read at boundary nodes; copied into the result).
  ScalarField solve(const ScalarField& rhs, const ScalarField& trace) const;

  double last_relative_residual() const { return last_residual_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Grid2D grid_;
  mutable double last_residual_ = 0.0;
};

/// Electric potential with its gradient and the saturated drift velocity.
struct FieldSolution {
  ScalarField V;
  ScalarField dVdx, dVdy;
  ScalarField vx, vy;
};

/// Solve -lambdaD^2 Lap(V) = 2 n0 - C with Dirichlet data VD.
/// The algebraic residual must come out <= 1e-10 relative or a SolverError
/// carrying the final residual is thrown.
ScalarField solve_poisson(const ScalarField& n0, const MaterialParams& params,
                          const ScalarField& VD);

/// Same solve through a cached factorization (grid and lambdaD fixed).
ScalarField solve_poisson(const DirichletEllipticSolver& poisson, const ScalarField& n0,
                          const MaterialParams& params, const ScalarField& VD);

/// v = -mu(|grad V|) grad V nodewise; |v| <= vsat everywhere by construction.
FieldSolution drift_velocity(const ScalarField& V, const MobilityModel& model);

}  // namespace spindrift

#endif
