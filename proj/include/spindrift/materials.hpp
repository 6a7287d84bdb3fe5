#ifndef SPINDRIFT_MATERIALS_HPP
#define SPINDRIFT_MATERIALS_HPP

#include "spindrift/grid.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace spindrift {

/// A mobility curve violates one of its admissibility conditions.
class AdmissibilityError : public std::runtime_error {
 public:
  explicit AdmissibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Velocity-saturation mobility curve mu(s) with certified saturation
/// velocity vsat and Lipschitz constant L of s -> s*mu(s).
///
/// Admissibility: mu in C^1, mu'(s) <= 0, s*mu(s) <= vsat, and
/// |s mu(s) - t mu(t)| <= L |s - t| for all s, t >= 0.
struct MobilityModel {
  enum class Kind { ConstantSaturated, CaugheyThomas };

  Kind kind = Kind::CaugheyThomas;
  double mu0 = 1.0;   // low-field mobility
  double vsat = 1.0;  // saturation velocity
  double L = 1.0;     // Lipschitz constant of s*mu(s); mu0 for both families

  static MobilityModel caughey_thomas(double mu0, double vsat);
  static MobilityModel constant_saturated(double mu0, double vsat);

  double mu(double s) const;
};

/// Evaluate mu(s). Throws std::domain_error for s < 0.
double mobility_eval(const MobilityModel& model, double s);

/// Result of the numerical admissibility check of a mobility curve.
struct MobilityCertificate {
  double empirical_vsat = 0.0;       // sup of s*mu(s) over the sample set
  double empirical_lipschitz = 0.0;  // sup finite-difference slope of s*mu(s)
  int samples = 0;
};

/// Check mu' <= 0, s*mu(s) <= vsat and the Lipschitz bound on a log-spaced
/// sample set of at least `samples` points. Throws AdmissibilityError naming
/// the violated clause. The callable overload exists so deliberately broken
/// curves can be probed in tests.
MobilityCertificate certify_mobility(const std::function<double(double)>& mu, double vsat,
                                     double lipschitz, int samples = 10000);
MobilityCertificate certify_mobility(const MobilityModel& model, int samples = 10000);

/// Material parameter fields: diffusion D(x) > 0, spin polarization
/// |p(x)| < 1, derived eta = sqrt(1 - p^2), doping C(x), plus the scalar
/// spin relaxation time tau (may be +inf), precession coupling gamma and
/// Debye length lambdaD.
struct MaterialParams {
  ScalarField D;
  ScalarField p;
  ScalarField eta;
  ScalarField C;
  double tau = 1.0;
  double gamma = 0.0;
  double lambdaD = 1.0;

  MaterialParams() = default;
  MaterialParams(ScalarField D_, ScalarField p_, ScalarField C_, double tau_, double gamma_,
                 double lambdaD_);

  double inv_tau() const { return std::isinf(tau) ? 0.0 : 1.0 / tau; }
  double min_D() const { return D.values.minCoeff(); }
  double max_abs_p() const { return p.values.abs().maxCoeff(); }
};

}  // namespace spindrift

#endif
