#include "spindrift/diagnostics.hpp"

#include "spindrift/stencil.hpp"

#include <cmath>
#include <limits>

namespace spindrift {

Eigen::ArrayXd quadrature_weights(const Grid2D& g) {
  Eigen::ArrayXd w(g.size());
  const double cell = g.hx() * g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double f = 1.0;
      if (i == 0 || i == g.nx - 1) f *= 0.5;
      if (j == 0 || j == g.ny - 1) f *= 0.5;
      w[g.idx(i, j)] = f * cell;
    }
  return w;
}

double entropy(const SpinState& n, const SpinState& ref) {
  require_same_grid(n.grid(), ref.grid(), "entropy");
  const Eigen::ArrayXd w = quadrature_weights(n.grid());
  double s = 0.0;
  for (int c = 0; c < 4; ++c)
    s += (w * (n.n[c].values - ref.n[c].values).square()).sum();
  return 0.5 * s;
}

double entropy_dissipation(const SpinState& n) {
  const Eigen::ArrayXd w = quadrature_weights(n.grid());
  double s = 0.0;
  for (int c = 0; c < 4; ++c) {
    auto [gx, gy] = gradient(n.n[c]);
    s += (w * (gx.values.square() + gy.values.square())).sum();
  }
  return s;
}

Norms norms(const ScalarField& f) {
  const Eigen::ArrayXd w = quadrature_weights(f.grid);
  Norms out;
  out.l2 = std::sqrt((w * f.values.square()).sum());
  out.linf = f.values.abs().maxCoeff();
  auto [gx, gy] = gradient(f);
  out.h1_semi = std::sqrt((w * (gx.values.square() + gy.values.square())).sum());
  return out;
}

Norms norms(const SpinState& n) {
  Norms out;
  double l2sq = 0.0, h1sq = 0.0;
  for (int c = 0; c < 4; ++c) {
    const Norms nc = norms(n.n[c]);
    l2sq += nc.l2 * nc.l2;
    h1sq += nc.h1_semi * nc.h1_semi;
    out.linf = std::max(out.linf, nc.linf);
  }
  out.l2 = std::sqrt(l2sq);
  out.h1_semi = std::sqrt(h1sq);
  return out;
}

double l2_distance(const SpinState& a, const SpinState& b) {
  require_same_grid(a.grid(), b.grid(), "l2_distance");
  const Eigen::ArrayXd w = quadrature_weights(a.grid());
  double s = 0.0;
  for (int c = 0; c < 4; ++c)
    s += (w * (a.n[c].values - b.n[c].values).square()).sum();
  return std::sqrt(s);
}

EntropyAudit entropy_inequality_monitor(const std::vector<StepReport>& steps, double c0, double c,
                                        double tol) {
  EntropyAudit audit;
  audit.c0 = c0;
  audit.c = c;
  if (steps.empty()) return audit;

  const double T = steps.back().t;
  const double S0 = steps.front().entropy_before;
  audit.max_excess = -std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepReport& r = steps[k];
    const double dSdt = (r.entropy_after - r.entropy_before) / r.h;
    const double excess = dSdt + c0 * r.entropy_dissipation - c * (r.entropy_after + 1.0);
    audit.max_excess = std::max(audit.max_excess, excess);
    if (excess > tol) audit.violations.push_back({static_cast<int>(k), r.t, excess, false});

    const double ch = c * r.h;
    const double c_env = ch < 1.0 ? c / (1.0 - ch) : std::numeric_limits<double>::infinity();
    const double envelope = (S0 + c_env * T) * std::exp(c_env * r.t);
    const double ratio = r.entropy_after / std::max(envelope, 1e-300);
    audit.max_envelope_ratio = std::max(audit.max_envelope_ratio, ratio);
    if (r.entropy_after > envelope + tol * (1.0 + envelope))
      audit.violations.push_back({static_cast<int>(k), r.t, ratio - 1.0, true});
  }
  return audit;
}

}  // namespace spindrift
