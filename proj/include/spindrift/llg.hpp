#ifndef SPINDRIFT_LLG_HPP
#define SPINDRIFT_LLG_HPP

#include "spindrift/grid.hpp"

#include <stdexcept>

namespace spindrift {

/// Unit-modulus magnetization field, evolving by
///   dm/dt = m ^ Lap m - m ^ (m ^ Lap m)
/// with homogeneous Neumann boundary conditions.
struct Magnetization {
  Vec3Field m;

  Magnetization() = default;
  explicit Magnetization(Vec3Field field);

  const Grid2D& grid() const { return m.grid; }

  /// max over nodes of | |m| - 1 |
  double modulus_defect() const;

  /// Pointwise renormalization m <- m / |m|.
  void renormalize();
};

/// Precession + damping right-hand side, m ^ Lap m - m ^ (m ^ Lap m), with
/// the Neumann-ghost Laplacian. Throws if the modulus defect exceeds 1e-6.
Vec3Field llg_rhs(const Magnetization& m);

/// Parabolic stability cap on the time step, factor * min(hx,hy)^2.
double llg_dt_cap(const Grid2D& g, double factor = 0.2);

/// One projected Heun step followed by pointwise renormalization. The
/// combined two-stage increment is projected onto the tangent plane of m
/// before the update, so the pre-renormalization direction is orthogonal
/// to m at every node.
Magnetization llg_step(const Magnetization& m, double dt, double dt_cap_factor = 0.2);

/// Same step with the tangent update direction exposed:
/// result = normalize(m + dt * update_direction) nodewise.
struct LlgStepDetail {
  Magnetization result;
  Vec3Field update_direction;
};
LlgStepDetail llg_step_detail(const Magnetization& m, double dt, double dt_cap_factor = 0.2);

/// Discrete Dirichlet (exchange) energy: the edge-difference quadratic form
/// whose gradient is the Neumann-ghost Laplacian.
double exchange_energy(const Vec3Field& m);

}  // namespace spindrift

#endif
