#include "spindrift/materials.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace spindrift;

TEST_SUITE("materials") {
  TEST_CASE("mobility_eval basics") {
    const MobilityModel ct = MobilityModel::caughey_thomas(1.0, 1.0);
    CHECK(mobility_eval(ct, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mobility_eval(ct, -0.5), std::domain_error);
  }

  TEST_CASE("caughey-thomas saturates: sup s*mu(s) <= vsat") {
    // dense sampling oracle of s * 2/(1+2s) -> 1
    const MobilityModel m = MobilityModel::caughey_thomas(2.0, 1.0);
    double sup = 0.0;
    for (int k = 0; k <= 100000; ++k) {
      const double s = 100.0 * k / 100000.0;
      sup = std::max(sup, s * m.mu(s));
    }
    CHECK(sup <= 1.0 + 1e-12);
  }

  TEST_CASE("caughey-thomas Lipschitz constant is mu0") {
    // finite-difference sup oracle certifying L = mu0
    const MobilityModel m = MobilityModel::caughey_thomas(2.0, 1.0);
    double worst = 0.0;
    double prev = 0.0;
    const double ds = 100.0 / 100000.0;
    for (int k = 1; k <= 100000; ++k) {
      const double s = k * ds;
      const double smu = s * m.mu(s);
      worst = std::max(worst, std::abs(smu - prev) / ds);
      prev = smu;
    }
    CHECK(worst <= 2.0 + 1e-6);
  }

  TEST_CASE("certify_mobility passes both shipped families") {
    const MobilityCertificate c1 = certify_mobility(MobilityModel::caughey_thomas(1.0, 1.0));
    CHECK(c1.empirical_vsat <= 1.0 + 1e-12);
    CHECK(c1.empirical_vsat > 0.99);  // s mu(s) -> vsat from below
    CHECK(c1.empirical_lipschitz <= 1.0 * (1.0 + 1e-6));

    const MobilityCertificate c2 = certify_mobility(MobilityModel::constant_saturated(1.5, 0.7));
    CHECK(c2.empirical_vsat <= 0.7 + 1e-12);
    CHECK(c2.empirical_lipschitz <= 1.5 * (1.0 + 1e-6));
  }

  TEST_CASE("certify_mobility rejects mu(s) = 1 + s for monotonicity") {
    CHECK_THROWS_WITH_AS(certify_mobility([](double s) { return 1.0 + s; }, 1.0, 1.0),
                         doctest::Contains("monotonicity"), AdmissibilityError);
  }

  TEST_CASE("certify_mobility names the violated saturation clause") {
    // monotone decreasing but saturating above the declared vsat
    CHECK_THROWS_WITH_AS(certify_mobility([](double s) { return 2.0 / (1.0 + s); }, 1.0, 2.0),
                         doctest::Contains("vsat"), AdmissibilityError);
  }

  TEST_CASE("certify_mobility names the violated Lipschitz clause") {
    CHECK_THROWS_WITH_AS(certify_mobility([](double s) { return 2.0 / (1.0 + s); }, 2.0, 0.5),
                         doctest::Contains("Lipschitz"), AdmissibilityError);
  }

  TEST_CASE("material params check admissibility at construction") {
    const Grid2D g(5, 5, 1.0, 1.0);
    ScalarField D(g, 1.0), p(g, 0.5), C(g, 2.0);
    const MaterialParams ok(D, p, C, 1.0, 0.5, 1.0);
    CHECK((ok.eta.values.square() + ok.p.values.square() - 1.0).abs().maxCoeff() <= 1e-14);

    ScalarField bad_p(g, 1.0);
    CHECK_THROWS_WITH_AS(MaterialParams(D, bad_p, C, 1.0, 0.5, 1.0),
                         doctest::Contains("sup |p| < 1"), std::invalid_argument);
    ScalarField bad_D(g, 0.0);
    CHECK_THROWS_WITH_AS(MaterialParams(bad_D, p, C, 1.0, 0.5, 1.0),
                         doctest::Contains("inf D > 0"), std::invalid_argument);
    CHECK_THROWS_AS(MaterialParams(D, p, C, -1.0, 0.5, 1.0), std::invalid_argument);
  }

  TEST_CASE("infinite tau means no spin relaxation") {
    const Grid2D g(5, 5, 1.0, 1.0);
    MaterialParams mp(ScalarField(g, 1.0), ScalarField(g, 0.0), ScalarField(g, 2.0),
                      std::numeric_limits<double>::infinity(), 1.0, 1.0);
    CHECK(mp.inv_tau() == 0.0);
  }
}
