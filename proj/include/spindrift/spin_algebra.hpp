#ifndef SPINDRIFT_SPIN_ALGEBRA_HPP
#define SPINDRIFT_SPIN_ALGEBRA_HPP

#include "spindrift/grid.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace spindrift {

/// Pointwise algebra of the 4x4 charge/spin diffusion matrix
///
///   A = D/eta^2 [ 1        -p m^T                      ]
///               [ -p m      eta I + (1 - eta) m (x) m  ]
///
/// with eta = sqrt(1 - p^2), its spectral projectors, and the reaction
/// matrix B with spin block 2*gamma*eps_ijk m_k - delta_ij / tau.
/// Free functions templated on scalar; component 0 is the particle density,
/// components 1..3 the spin density vector.

namespace detail {
template <class S>
void require_unit(const Eigen::Matrix<S, 3, 1>& m) {
  if (std::abs(m.norm() - S(1)) > S(1e-10))
    throw std::domain_error("spin_algebra: magnetization must be a unit vector");
}
template <class S>
void require_polarization(S p) {
  if (!(std::abs(p) < S(1))) throw std::domain_error("spin_algebra: |p| < 1 required");
}
}  // namespace detail

template <class S>
struct SpinProjectors {
  Eigen::Matrix<S, 4, 4> plus, minus, perp;
};

/// Spectral projectors of A onto the eigenspaces of D/(1+p), D/(1-p), D/eta.
template <class S>
SpinProjectors<S> projectors(const Eigen::Matrix<S, 3, 1>& m) {
  detail::require_unit(m);
  using Mat4 = Eigen::Matrix<S, 4, 4>;
  const Eigen::Matrix<S, 3, 3> mm = m * m.transpose();
  SpinProjectors<S> P;
  P.plus.setZero();
  P.plus(0, 0) = S(0.5);
  P.plus.template block<1, 3>(0, 1) = S(0.5) * m.transpose();
  P.plus.template block<3, 1>(1, 0) = S(0.5) * m;
  P.plus.template block<3, 3>(1, 1) = S(0.5) * mm;
  P.minus = P.plus;
  P.minus.template block<1, 3>(0, 1) *= S(-1);
  P.minus.template block<3, 1>(1, 0) *= S(-1);
  P.perp = Mat4::Zero();
  P.perp.template block<3, 3>(1, 1) = Eigen::Matrix<S, 3, 3>::Identity() - mm;
  return P;
}

/// The diffusion matrix from its block formula.
template <class S>
Eigen::Matrix<S, 4, 4> assemble_diffusion_matrix(S D, S p, const Eigen::Matrix<S, 3, 1>& m) {
  detail::require_polarization(p);
  detail::require_unit(m);
  const S eta = std::sqrt(S(1) - p * p);
  Eigen::Matrix<S, 4, 4> a;
  a(0, 0) = S(1);
  a.template block<1, 3>(0, 1) = -p * m.transpose();
  a.template block<3, 1>(1, 0) = -p * m;
  a.template block<3, 3>(1, 1) =
      eta * Eigen::Matrix<S, 3, 3>::Identity() + (S(1) - eta) * (m * m.transpose());
  a *= D / (eta * eta);
  return a;
}

/// Reaction matrix: first row/column zero, spin block 2*gamma*(x ^ m) - x/tau.
/// tau may be +inf (no spin relaxation).
template <class S>
Eigen::Matrix<S, 4, 4> assemble_reaction_matrix(S gamma, S tau, const Eigen::Matrix<S, 3, 1>& m) {
  if (!(tau > S(0))) throw std::domain_error("assemble_reaction_matrix: tau > 0 required");
  detail::require_unit(m);
  const S it = std::isinf(tau) ? S(0) : S(1) / tau;
  Eigen::Matrix<S, 4, 4> b = Eigen::Matrix<S, 4, 4>::Zero();
  // b_ij = 2 gamma eps_ijk m_k - delta_ij/tau  (1 <= i,j <= 3)
  b(1, 2) = S(2) * gamma * m(2);
  b(1, 3) = -S(2) * gamma * m(1);
  b(2, 1) = -S(2) * gamma * m(2);
  b(2, 3) = S(2) * gamma * m(0);
  b(3, 1) = S(2) * gamma * m(1);
  b(3, 2) = -S(2) * gamma * m(0);
  b(1, 1) = b(2, 2) = b(3, 3) = -it;
  return b;
}

/// Change of variables n -> (n+, n-, n_perp): spin-up/down densities along m
/// and the transverse spin component.
template <class S>
std::tuple<S, S, Eigen::Matrix<S, 3, 1>> to_diag(const Eigen::Matrix<S, 4, 1>& n,
                                                 const Eigen::Matrix<S, 3, 1>& m) {
  detail::require_unit(m);
  const Eigen::Matrix<S, 3, 1> s = n.template tail<3>();
  const S along = s.dot(m);
  return {n(0) + along, n(0) - along, s - along * m};
}

/// Inverse of to_diag; small m-components of n_perp are projected out.
template <class S>
Eigen::Matrix<S, 4, 1> from_diag(S n_plus, S n_minus, const Eigen::Matrix<S, 3, 1>& n_perp,
                                 const Eigen::Matrix<S, 3, 1>& m) {
  detail::require_unit(m);
  Eigen::Matrix<S, 4, 1> n;
  n(0) = (n_plus + n_minus) / S(2);
  n.template tail<3>() =
      (n_plus - n_minus) / S(2) * m + (n_perp - n_perp.dot(m) * m);
  return n;
}

/// Diagonalized state fields n+, n-, n_perp with n_perp . m = 0 pointwise.
struct DiagState {
  ScalarField n_plus;
  ScalarField n_minus;
  Vec3Field n_perp;

  DiagState() = default;
  explicit DiagState(const Grid2D& g) : n_plus(g), n_minus(g), n_perp(g) {}
};

}  // namespace spindrift

#endif
