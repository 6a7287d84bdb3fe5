#ifndef SPINDRIFT_TRANSPORT_HPP
#define SPINDRIFT_TRANSPORT_HPP

#include "spindrift/diagnostics.hpp"
#include "spindrift/field_solver.hpp"
#include "spindrift/grid.hpp"
#include "spindrift/llg.hpp"
#include "spindrift/materials.hpp"
#include "spindrift/spin_algebra.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace spindrift {

/// The per-step Picard iteration failed to converge.
class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(const std::string& msg, std::vector<double> history)
      : std::runtime_error(msg), residual_history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

struct SolverConfig {
  double h = 1e-3;             // time step
  double fp_tol = 1e-9;        // fixed-point relative update tolerance
  int fp_max = 50;             // max Picard iterations per step
  double damping = 1.0;        // Picard damping in (0, 1]
  double cg_tol = 1e-12;       // CG stopping tolerance (residual target 1e-11)
  bool harmonic_faces = false; // harmonic instead of arithmetic face averages
  int nonconvergence_retries = 4;  // h-halvings on fixed-point failure
  double entropy_c0 = -1.0;    // < 0: use Dmin / (1 + max|p|)
  double entropy_c = 20.0;     // calibrated constant of the entropy inequality
  double llg_dt_cap_factor = 0.2;
};

/// Per-node 4x4 coefficient matrices.
using MatrixField = std::vector<Eigen::Matrix4d>;

MatrixField assemble_A_field(const MaterialParams& params, const Vec3Field& m);
MatrixField assemble_B_field(const MaterialParams& params, const Vec3Field& m);

/// Linear system of one implicit-Euler step,
///   u_i - h div(a_ij grad u_j) = n_prev_i - h div(a_ij n_j v) + h b_ij n_j,
/// with diffusion implicit in u and drift/reaction frozen at the current
/// Picard iterate n. Unknowns are the four components at interior nodes
/// (index 4 * interior_node + component); Dirichlet values are eliminated
/// into the right-hand side.
struct StepSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  int nix = 0, niy = 0;  // interior node counts
};

StepSystem assemble_step_system(const SpinState& n_prev, const SpinState& n_iter,
                                const FieldSolution& field, const MatrixField& a,
                                const MatrixField& b, double h, const SpinState& dirichlet,
                                bool harmonic_faces = false);

/// Scatter/gather between a SpinState and the interior unknown vector.
Eigen::VectorXd interior_vector(const SpinState& s);
SpinState compose_state(const Grid2D& g, const Eigen::VectorXd& interior,
                        const SpinState& dirichlet);

struct StepOutcome {
  SpinState state;
  FieldSolution field;
  StepReport report;
};

/// One implicit-Euler step solved by damped Picard iteration. Holds the
/// cached Poisson factorization; reusable across steps on a fixed grid.
class TransportStepper {
 public:
  TransportStepper(const Grid2D& grid, MaterialParams params, MobilityModel mobility,
                   SpinState dirichlet, ScalarField VD, SolverConfig cfg);

  /// Advance n_prev by cfg.h (or an explicit dt) with magnetization frozen at
  /// the end-of-interval state m_end. Throws FixedPointError on Picard
  /// nonconvergence.
  StepOutcome step(const SpinState& n_prev, const Vec3Field& m_end, double t_before) const;
  StepOutcome step(const SpinState& n_prev, const Vec3Field& m_end, double t_before,
                   double dt) const;

  const SpinState& dirichlet() const { return dirichlet_; }
  const ScalarField& dirichlet_V() const { return VD_; }
  const MaterialParams& params() const { return params_; }
  const MobilityModel& mobility() const { return mobility_; }
  const SolverConfig& config() const { return cfg_; }
  double entropy_c0() const;

 private:
  struct MatrixCache;

  Grid2D grid_;
  MaterialParams params_;
  MobilityModel mobility_;
  SpinState dirichlet_;
  ScalarField VD_;
  SolverConfig cfg_;
  std::shared_ptr<DirichletEllipticSolver> poisson_;
  std::shared_ptr<MatrixCache> cache_;  // reused while (m, dt) stay fixed
};

/// Convenience wrapper: one step without keeping a stepper around.
StepOutcome fixed_point_step(const SpinState& n_prev, const Vec3Field& m, const SolverConfig& cfg,
                             const MaterialParams& params, const MobilityModel& mobility,
                             const SpinState& dirichlet, const ScalarField& VD, double t_before = 0.0);

struct TrajectorySample {
  double t = 0.0;
  SpinState state;
  Vec3Field m;
};

struct TransientResult {
  std::vector<StepReport> reports;
  std::vector<TrajectorySample> samples;  // t = 0 plus every snapshot time
  SpinState final_state;
  Magnetization final_m;
};

/// Advance transport and (optionally live) Landau-Lifshitz over [0, T] with
/// the same step h; the transport step sees the magnetization at the end of
/// its interval. The magnetization integrator sub-steps each interval as its
/// parabolic cap requires. On Picard nonconvergence a step is retried on
/// half the step size, up to cfg.nonconvergence_retries halvings.
/// `on_step` and `on_state` (optional) observe every accepted step.
using StateObserver = std::function<void(double, const SpinState&, const Vec3Field&)>;

TransientResult run_transient(const SpinState& initial, const Magnetization& m0, bool frozen_m,
                              double T, const TransportStepper& stepper, int snapshot_every = 0,
                              const std::function<void(const StepReport&)>& on_step = {},
                              const StateObserver& on_state = {});

}  // namespace spindrift

#endif
