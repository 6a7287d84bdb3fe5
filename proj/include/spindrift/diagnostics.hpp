#ifndef SPINDRIFT_DIAGNOSTICS_HPP
#define SPINDRIFT_DIAGNOSTICS_HPP

#include "spindrift/grid.hpp"

#include <array>
#include <vector>

namespace spindrift {

/// Four-component density state n = (n0, n1, n2, n3): particle density plus
/// spin density vector, each a scalar field on one grid.
struct SpinState {
  std::array<ScalarField, 4> n;

  SpinState() = default;
  explicit SpinState(const Grid2D& g) : n{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)} {}

  const Grid2D& grid() const { return n[0].grid; }
  bool all_finite() const {
    return n[0].all_finite() && n[1].all_finite() && n[2].all_finite() && n[3].all_finite();
  }
};

/// Per-step record emitted by the transport solver.
struct StepReport {
  double t = 0.0;
  int fp_iters = 0;
  double fp_residual = 0.0;
  double linear_residual = 0.0;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  double entropy_dissipation = 0.0;  // integral |grad n|^2
  double inequality_slack = 0.0;
  double h = 0.0;
  double min_n0 = 0.0;
  double mass = 0.0;
  double vmax = 0.0;
};

/// Trapezoidal quadrature weight field (1 inside, 1/2 on edges, 1/4 corners),
/// including the hx*hy cell measure.
Eigen::ArrayXd quadrature_weights(const Grid2D& g);

/// Quadratic entropy 1/2 integral |n - ref|^2 (trapezoidal weights).
double entropy(const SpinState& n, const SpinState& ref);

/// integral |grad n|^2 summed over the four components.
double entropy_dissipation(const SpinState& n);

struct Norms {
  double l2 = 0.0;
  double linf = 0.0;
  double h1_semi = 0.0;  // sqrt(integral |grad f|^2)
};

Norms norms(const ScalarField& f);
Norms norms(const SpinState& n);

double l2_distance(const SpinState& a, const SpinState& b);

/// Entropy inequality audit of a completed run: recomputes, per step,
///   excess = h^-1 (S_k - S_{k-1}) + c0 * dissipation_k - c (S_k + 1)
/// and flags steps with excess > tol; also checks that the trajectory stays
/// under the integrated Gronwall envelope (S_0 + c_env T) exp(c_env t) with
/// c_env = c / (1 - c h), the discrete-in-time version of the envelope.
struct EntropyViolation {
  int step = 0;
  double t = 0.0;
  double excess = 0.0;       // positive part of the per-step inequality
  bool gronwall = false;     // true when the envelope itself was crossed
};

struct EntropyAudit {
  std::vector<EntropyViolation> violations;
  double max_excess = 0.0;          // most positive per-step excess (<= 0 when clean)
  double max_envelope_ratio = 0.0;  // max over steps of S / envelope
  double c0 = 0.0;
  double c = 0.0;
  bool clean() const { return violations.empty(); }
};

EntropyAudit entropy_inequality_monitor(const std::vector<StepReport>& steps, double c0, double c,
                                        double tol = 1e-12);

}  // namespace spindrift

#endif
