#ifndef SPINDRIFT_STENCIL_HPP
#define SPINDRIFT_STENCIL_HPP

#include "spindrift/grid.hpp"

#include <utility>

namespace spindrift {

/// Discrete gradient: central differences at interior nodes, one-sided
/// second-order stencils on the boundary. Exact on affine fields.
std::pair<ScalarField, ScalarField> gradient(const ScalarField& f);

/// Discrete divergence of (w1, w2), the negative formal adjoint of gradient
/// on interior-supported fields (summation-by-parts pairing).
ScalarField divergence(const ScalarField& w1, const ScalarField& w2);

/// 5-point Laplacian. DirichletTrace rows take boundary neighbor values from
/// the supplied trace and return 0 at boundary nodes themselves; NeumannZero
/// uses ghost-node reflection so the stencil is defined at every node.
ScalarField laplacian(const ScalarField& f, const BoundaryKind& bc);

/// Componentwise Neumann-ghost Laplacian of a vector field.
Vec3Field laplacian_neumann(const Vec3Field& f);

/// Componentwise gradient magnitude squared, summed over the 3 components.
ScalarField gradient_norm_squared(const Vec3Field& f);

}  // namespace spindrift

#endif
