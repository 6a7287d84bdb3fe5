#ifndef SPINDRIFT_TEST_HELPERS_HPP
#define SPINDRIFT_TEST_HELPERS_HPP

#include "spindrift/transport.hpp"

#include <cmath>
#include <functional>

namespace spindrift::testing {

inline ScalarField fill(const Grid2D& g, const std::function<double(double, double)>& f) {
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out(i, j) = f(g.x(i), g.y(j));
  return out;
}

inline Vec3Field constant_m(const Grid2D& g, Eigen::Vector3d m) {
  Vec3Field f(g);
  f.values.colwise() = m.normalized();
  return f;
}

// strictly uniform parameters with explicit knobs
inline MaterialParams uniform_params(const Grid2D& g, double D, double p, double C, double tau,
                                     double gamma, double lambdaD) {
  return MaterialParams(ScalarField(g, D), ScalarField(g, p), ScalarField(g, C), tau, gamma,
                        lambdaD);
}

inline SpinState constant_state(const Grid2D& g, double n0, Eigen::Vector3d spin = {0, 0, 0}) {
  SpinState s(g);
  s.n[0].values.setConstant(n0);
  for (int c = 0; c < 3; ++c) s.n[c + 1].values.setConstant(spin[c]);
  return s;
}

}  // namespace spindrift::testing

#endif
