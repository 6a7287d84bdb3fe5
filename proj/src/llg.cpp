#include "spindrift/llg.hpp"

#include "spindrift/stencil.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace spindrift {

namespace {

Vec3Field rhs_unchecked(const Vec3Field& m) {
  const Vec3Field lap = laplacian_neumann(m);
  Vec3Field out(m.grid);
  for (Eigen::Index k = 0; k < m.grid.size(); ++k) {
    const Eigen::Vector3d mv = m.values.col(k);
    const Eigen::Vector3d lv = lap.values.col(k);
    const Eigen::Vector3d prec = mv.cross(lv);
    out.values.col(k) = prec - mv.cross(prec);
  }
  return out;
}

}  // namespace

Magnetization::Magnetization(Vec3Field field) : m(std::move(field)) {
  if (!m.all_finite()) throw std::invalid_argument("Magnetization: field must be finite");
}

double Magnetization::modulus_defect() const {
  return (m.values.colwise().norm().array() - 1.0).abs().maxCoeff();
}

void Magnetization::renormalize() {
  for (Eigen::Index k = 0; k < m.grid.size(); ++k) m.values.col(k).normalize();
}

Vec3Field llg_rhs(const Magnetization& m) {
  if (m.modulus_defect() > 1e-6)
    throw std::runtime_error("llg_rhs: magnetization modulus drifted beyond 1e-6");
  return rhs_unchecked(m.m);
}

double llg_dt_cap(const Grid2D& g, double factor) {
  const double h = std::min(g.hx(), g.hy());
  return factor * h * h;
}

LlgStepDetail llg_step_detail(const Magnetization& m, double dt, double dt_cap_factor) {
  if (!(dt > 0.0)) throw std::invalid_argument("llg_step: dt must be positive");
  if (dt > llg_dt_cap(m.grid(), dt_cap_factor) * (1.0 + 1e-12))
    throw std::invalid_argument("llg_step: dt exceeds the parabolic stability cap");
  if (m.modulus_defect() > 1e-6)
    throw std::runtime_error("llg_step: magnetization modulus drifted beyond 1e-6");

  const Vec3Field k1 = rhs_unchecked(m.m);
  Vec3Field stage(m.grid());
  stage.values = m.m.values + dt * k1.values;
  const Vec3Field k2 = rhs_unchecked(stage);

  LlgStepDetail out{m, Vec3Field(m.grid())};
  for (Eigen::Index k = 0; k < m.grid().size(); ++k) {
    const Eigen::Vector3d mv = m.m.values.col(k);
    Eigen::Vector3d u = 0.5 * (k1.values.col(k) + k2.values.col(k));
    u -= u.dot(mv) * mv;  // tangent-plane projection of the combined increment
    out.update_direction.values.col(k) = u;
    out.result.m.values.col(k) = mv + dt * u;
  }
  if (!out.result.m.all_finite())
    throw std::runtime_error("llg_step: update produced NaN (instability)");
  out.result.renormalize();
  return out;
}

Magnetization llg_step(const Magnetization& m, double dt, double dt_cap_factor) {
  return llg_step_detail(m, dt, dt_cap_factor).result;
}

double exchange_energy(const Vec3Field& m) {
  const Grid2D& g = m.grid;
  const double hx = g.hx(), hy = g.hy();
  double e = 0.0;
  // trapezoidal quadrature of |grad m|^2 with forward differences; this is
  // the quadratic form whose weighted gradient is the Neumann-ghost Laplacian
  for (int j = 0; j < g.ny; ++j) {
    const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i + 1 < g.nx; ++i)
      e += wy * hy / hx * (m.values.col(g.idx(i + 1, j)) - m.values.col(g.idx(i, j))).squaredNorm();
  }
  for (int i = 0; i < g.nx; ++i) {
    const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
    for (int j = 0; j + 1 < g.ny; ++j)
      e += wx * hx / hy * (m.values.col(g.idx(i, j + 1)) - m.values.col(g.idx(i, j))).squaredNorm();
  }
  return 0.5 * e;
}

}  // namespace spindrift
