#ifndef SPINDRIFT_STEADY_STATE_HPP
#define SPINDRIFT_STEADY_STATE_HPP

#include "spindrift/field_solver.hpp"
#include "spindrift/grid.hpp"
#include "spindrift/materials.hpp"

#include <utility>
#include <vector>

namespace spindrift {

/// Zero-current equilibrium (n_eq, V_eq): grad n0 + n0 mu(|grad V|) grad V = 0
/// with the semilinear Poisson equation, spin identically zero. Solved in the
/// log variable u = log n0.
struct Equilibrium {
  ScalarField n0_eq;
  ScalarField V_eq;
  ScalarField u_eq;
  ScalarField curl_residual;
  double curl_l2 = 0.0;
  double zero_flux_linf = 0.0;  // discrete residual of the zero-current identity
  double smallness = 0.0;       // (vsat)^2 + L^2 lambdaD^-4 ||n_eq||_inf^2
  int gummel_sweeps = 0;
};

struct GummelOptions {
  int max_sweeps = 200;
  double tol = 1e-10;
  double damping = 1.0;
  int newton_max = 30;
};

class GummelError : public std::runtime_error {
 public:
  GummelError(const std::string& msg, std::vector<double> history)
      : std::runtime_error(msg), update_history_(std::move(history)) {}
  const std::vector<double>& update_history() const { return update_history_; }

 private:
  std::vector<double> update_history_;
};

/// Damped Gummel iteration: given V solve the linear problem
///   Lap u = -div(mu(|grad V|) grad V),  u = log n0^D on the boundary,
/// then the semilinear Poisson equation
///   lambdaD^2 Lap V + 2 exp(u - mu(V - V_cur)) - C = 0,  V = V^D,
/// by Newton on the exponential; repeat until the joint relative update
/// drops below tol. Requires n0^D > 0 on the boundary.
Equilibrium solve_equilibrium(const MaterialParams& params, const MobilityModel& mobility,
                              const ScalarField& n0D, const ScalarField& VD,
                              const GummelOptions& opts = {});

/// 2D curl d1 w2 - d2 w1 of w = mu(|grad V|) grad V, with its L2 norm.
/// Reported as a diagnostic, never enforced.
std::pair<ScalarField, double> curl_constraint_residual(const ScalarField& V_eq,
                                                        const MobilityModel& mobility);

/// Least-squares exponential-decay fit of ||n(t) - n_eq||_L2 on the
/// post-transient window.
struct DecayFit {
  double k1 = 0.0;
  double k2 = 0.0;
  double r2 = 0.0;
  bool fitted = false;    // false when the norm stayed below the floor
  bool reliable = true;   // false when the norm is non-monotone beyond tolerance
  int upticks = 0;        // window samples where the norm increased
  double smallness = 0.0;
};

DecayFit decay_analysis(const std::vector<std::pair<double, double>>& norm_history,
                        const Equilibrium& eq, double window_skip_fraction = 0.05,
                        double floor = 1e-8);

}  // namespace spindrift

#endif
