#include "spindrift/materials.hpp"

#include <cmath>
#include <vector>

namespace spindrift {

MobilityModel MobilityModel::caughey_thomas(double mu0, double vsat) {
  if (!(mu0 > 0.0) || !(vsat > 0.0))
    throw std::invalid_argument("MobilityModel: mu0 and vsat must be positive");
  return MobilityModel{Kind::CaugheyThomas, mu0, vsat, mu0};
}

MobilityModel MobilityModel::constant_saturated(double mu0, double vsat) {
  if (!(mu0 > 0.0) || !(vsat > 0.0))
    throw std::invalid_argument("MobilityModel: mu0 and vsat must be positive");
  return MobilityModel{Kind::ConstantSaturated, mu0, vsat, mu0};
}

double MobilityModel::mu(double s) const {
  const double x = mu0 * s / vsat;
  switch (kind) {
    case Kind::CaugheyThomas:
      return mu0 / (1.0 + x);
    case Kind::ConstantSaturated:
      // near-constant at small s, s*mu(s) -> vsat smoothly; stays C^1
      return mu0 / std::sqrt(1.0 + x * x);
  }
  return mu0;
}

double mobility_eval(const MobilityModel& model, double s) {
  if (s < 0.0) throw std::domain_error("mobility_eval: s must be nonnegative");
  return model.mu(s);
}

MobilityCertificate certify_mobility(const std::function<double(double)>& mu, double vsat,
                                     double lipschitz, int samples) {
  if (samples < 2) throw std::invalid_argument("certify_mobility: need at least 2 samples");

  // log-spaced samples spanning eight decades, with s = 0 prepended
  std::vector<double> s;
  s.reserve(samples + 1);
  s.push_back(0.0);
  const double lo = std::log(1e-4), hi = std::log(1e4);
  for (int k = 0; k < samples; ++k)
    s.push_back(std::exp(lo + (hi - lo) * k / double(samples - 1)));

  MobilityCertificate cert;
  cert.samples = static_cast<int>(s.size());

  const double tol = 1e-9;
  double prev_mu = mu(s[0]);
  double prev_smu = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double m = mu(s[k]);
    if (!(m > 0.0))
      throw AdmissibilityError("mobility inadmissible: mu(s) > 0 violated at s = " +
                               std::to_string(s[k]));
    if (k > 0 && m > prev_mu * (1.0 + tol) + tol)
      throw AdmissibilityError("mobility inadmissible: monotonicity mu'(s) <= 0 violated near s = " +
                               std::to_string(s[k]));
    const double smu = s[k] * m;
    cert.empirical_vsat = std::max(cert.empirical_vsat, smu);
    if (smu > vsat * (1.0 + tol))
      throw AdmissibilityError("mobility inadmissible: s*mu(s) <= vsat violated at s = " +
                               std::to_string(s[k]));
    if (k > 0) {
      const double slope = std::abs(smu - prev_smu) / (s[k] - s[k - 1]);
      cert.empirical_lipschitz = std::max(cert.empirical_lipschitz, slope);
    }
    prev_mu = m;
    prev_smu = smu;
  }
  if (cert.empirical_lipschitz > lipschitz * (1.0 + 1e-6))
    throw AdmissibilityError("mobility inadmissible: Lipschitz bound L on s*mu(s) violated, empirical " +
                             std::to_string(cert.empirical_lipschitz) + " > declared " +
                             std::to_string(lipschitz));
  return cert;
}

MobilityCertificate certify_mobility(const MobilityModel& model, int samples) {
  return certify_mobility([&model](double s) { return model.mu(s); }, model.vsat, model.L, samples);
}

MaterialParams::MaterialParams(ScalarField D_, ScalarField p_, ScalarField C_, double tau_,
                               double gamma_, double lambdaD_)
    : D(std::move(D_)), p(std::move(p_)), C(std::move(C_)), tau(tau_), gamma(gamma_),
      lambdaD(lambdaD_) {
  require_same_grid(D.grid, p.grid, "MaterialParams");
  require_same_grid(D.grid, C.grid, "MaterialParams");
  if (!(D.values.minCoeff() > 0.0))
    throw std::invalid_argument("MaterialParams: inf D > 0 required");
  if (!(p.values.abs().maxCoeff() < 1.0))
    throw std::invalid_argument("MaterialParams: sup |p| < 1 required");
  if (!(tau > 0.0)) throw std::invalid_argument("MaterialParams: tau > 0 required");
  if (gamma < 0.0) throw std::invalid_argument("MaterialParams: gamma >= 0 required");
  if (!(lambdaD > 0.0)) throw std::invalid_argument("MaterialParams: lambdaD > 0 required");
  eta = ScalarField(D.grid);
  eta.values = (1.0 - p.values.square()).sqrt();
}

}  // namespace spindrift
