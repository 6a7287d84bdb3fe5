#include "spindrift/stencil.hpp"

namespace spindrift {

namespace {

// One-dimensional derivative along x at node (i,j); second order everywhere.
inline double ddx(const ScalarField& f, int i, int j, double hx, int nx) {
  if (i == 0) return (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) / (2.0 * hx);
  if (i == nx - 1) return (3.0 * f(nx - 1, j) - 4.0 * f(nx - 2, j) + f(nx - 3, j)) / (2.0 * hx);
  return (f(i + 1, j) - f(i - 1, j)) / (2.0 * hx);
}

inline double ddy(const ScalarField& f, int i, int j, double hy, int ny) {
  if (j == 0) return (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) / (2.0 * hy);
  if (j == ny - 1) return (3.0 * f(i, ny - 1) - 4.0 * f(i, ny - 2) + f(i, ny - 3)) / (2.0 * hy);
  return (f(i, j + 1) - f(i, j - 1)) / (2.0 * hy);
}

}  // namespace

std::pair<ScalarField, ScalarField> gradient(const ScalarField& f) {
  const Grid2D& g = f.grid;
  const double hx = g.hx(), hy = g.hy();
  ScalarField fx(g), fy(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      fx(i, j) = ddx(f, i, j, hx, g.nx);
      fy(i, j) = ddy(f, i, j, hy, g.ny);
    }
  return {std::move(fx), std::move(fy)};
}

ScalarField divergence(const ScalarField& w1, const ScalarField& w2) {
  require_same_grid(w1.grid, w2.grid, "divergence");
  const Grid2D& g = w1.grid;
  const double hx = g.hx(), hy = g.hy();
  ScalarField d(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d(i, j) = ddx(w1, i, j, hx, g.nx) + ddy(w2, i, j, hy, g.ny);
  return d;
}

ScalarField laplacian(const ScalarField& f, const BoundaryKind& bc) {
  const Grid2D& g = f.grid;
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  ScalarField out(g);

  if (bc.tag == BoundaryKind::Tag::DirichletTrace) {
    require_same_grid(bc.trace.grid, g, "laplacian");
    auto val = [&](int i, int j) { return g.is_boundary(i, j) ? bc.trace(i, j) : f(i, j); };
    for (int j = 1; j < g.ny - 1; ++j)
      for (int i = 1; i < g.nx - 1; ++i)
        out(i, j) = (val(i + 1, j) - 2.0 * f(i, j) + val(i - 1, j)) * ihx2 +
                    (val(i, j + 1) - 2.0 * f(i, j) + val(i, j - 1)) * ihy2;
    // Boundary rows carry the trace, not an equation; report 0 there.
    return out;
  }

  // NeumannZero: reflect across the boundary (ghost = first interior mirror).
  auto ref = [&](int i, int j) {
    if (i < 0) i = -i;
    if (i > g.nx - 1) i = 2 * (g.nx - 1) - i;
    if (j < 0) j = -j;
    if (j > g.ny - 1) j = 2 * (g.ny - 1) - j;
    return f(i, j);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (ref(i + 1, j) - 2.0 * f(i, j) + ref(i - 1, j)) * ihx2 +
                  (ref(i, j + 1) - 2.0 * f(i, j) + ref(i, j - 1)) * ihy2;
  return out;
}

Vec3Field laplacian_neumann(const Vec3Field& f) {
  Vec3Field out(f.grid);
  const BoundaryKind nb = BoundaryKind::neumann_zero();
  for (int k = 0; k < 3; ++k) out.set_component(k, laplacian(f.component(k), nb));
  return out;
}

ScalarField gradient_norm_squared(const Vec3Field& f) {
  ScalarField out(f.grid);
  for (int k = 0; k < 3; ++k) {
    auto [gx, gy] = gradient(f.component(k));
    out.values += gx.values.square() + gy.values.square();
  }
  return out;
}

}  // namespace spindrift
