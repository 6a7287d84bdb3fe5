#ifndef SPINDRIFT_SCENARIO_HPP
#define SPINDRIFT_SCENARIO_HPP

#include "spindrift/config.hpp"
#include "spindrift/io.hpp"
#include "spindrift/materials.hpp"
#include "spindrift/transport.hpp"

#include <string>

namespace spindrift {

/// Materialized scenario inputs: grid, fields, parameters, solver config.
struct ScenarioSetup {
  Grid2D grid;
  MaterialParams params;
  MobilityModel mobility;
  SpinState initial;
  SpinState dirichlet;
  ScalarField VD;
  Magnetization m0;
  SolverConfig solver;
};

ScenarioSetup build_scenario(const ScenarioConfig& cfg);

ScalarField make_field(const Grid2D& g, const Profile& p);
Vec3Field make_m_field(const Grid2D& g, const MagnetizationProfile& p);

struct ScenarioResult {
  int status = 0;  // 0 iff every hard invariant held
  Summary summary;
};

/// Execute the configured mode; writes diagnostics CSV, snapshots, and a
/// summary key-value file under cfg.output_dir.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Empirical smallness threshold: bisection over vsat of the largest value
/// for which the relative entropy still decays monotonically (past the skip
/// window) in a coarsened version of the given decay scenario. Returns the
/// smallness quantity (vsat)^2 + L^2 lambdaD^-4 ||n_eq||_inf^2 at that vsat.
double estimate_decay_threshold(const ScenarioConfig& cfg, int bisection_steps = 6);

}  // namespace spindrift

#endif
