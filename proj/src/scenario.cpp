#include "spindrift/scenario.hpp"

#include "spindrift/decoupled.hpp"
#include "spindrift/steady_state.hpp"
#include "spindrift/stencil.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

namespace spindrift {

ScalarField make_field(const Grid2D& g, const Profile& p) {
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(i, j) = p.eval(g.x(i), g.y(j), g.lx, g.ly);
  return f;
}

Vec3Field make_m_field(const Grid2D& g, const MagnetizationProfile& p) {
  Vec3Field f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(i, j) = p.eval(g.x(i), g.y(j), g.lx, g.ly);
  return f;
}

ScenarioSetup build_scenario(const ScenarioConfig& cfg) {
  ScenarioSetup s{
      Grid2D(cfg.nx, cfg.ny, cfg.lx, cfg.ly), {}, {}, {}, {}, {}, {}, {}};
  s.params = MaterialParams(make_field(s.grid, cfg.D), make_field(s.grid, cfg.p),
                            make_field(s.grid, cfg.C), cfg.tau, cfg.gamma, cfg.lambdaD);
  s.mobility = cfg.mobility_kind == "caughey_thomas"
                   ? MobilityModel::caughey_thomas(cfg.mu0, cfg.vsat)
                   : MobilityModel::constant_saturated(cfg.mu0, cfg.vsat);
  certify_mobility(s.mobility);

  s.initial = SpinState(s.grid);
  s.initial.n[0] = make_field(s.grid, cfg.n0);
  s.initial.n[1] = make_field(s.grid, cfg.n1);
  s.initial.n[2] = make_field(s.grid, cfg.n2);
  s.initial.n[3] = make_field(s.grid, cfg.n3);

  s.dirichlet = SpinState(s.grid);
  s.dirichlet.n[0] = make_field(s.grid, cfg.bc_n0);
  s.dirichlet.n[1] = make_field(s.grid, cfg.bc_n1);
  s.dirichlet.n[2] = make_field(s.grid, cfg.bc_n2);
  s.dirichlet.n[3] = make_field(s.grid, cfg.bc_n3);
  s.VD = make_field(s.grid, cfg.bc_V);

  s.m0 = Magnetization(make_m_field(s.grid, cfg.m_profile));

  s.solver.h = cfg.h;
  s.solver.fp_tol = cfg.fp_tol;
  s.solver.fp_max = cfg.fp_max;
  s.solver.damping = cfg.damping;
  s.solver.cg_tol = cfg.cg_tol;
  s.solver.harmonic_faces = cfg.face_average == "harmonic";
  s.solver.nonconvergence_retries = cfg.retries;
  s.solver.entropy_c0 = cfg.entropy_c0;
  s.solver.entropy_c = cfg.entropy_c;
  s.solver.llg_dt_cap_factor = cfg.llg_dt_cap_factor;
  return s;
}

namespace {

namespace fs = std::filesystem;

std::string snap_name(const std::string& dir, double t, const std::string& what) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "snap_t%.6f_%s.txt", t, what.c_str());
  return dir + "/" + buf;
}

void write_state_snapshot(const std::string& dir, double t, const SpinState& n,
                          const Vec3Field& m) {
  write_scalar_snapshot(snap_name(dir, t, "n0"), n.n[0]);
  Vec3Field spin(n.grid());
  for (int k = 0; k < 3; ++k) spin.set_component(k, n.n[k + 1]);
  write_vec3_snapshot(snap_name(dir, t, "spin"), spin);
  write_vec3_snapshot(snap_name(dir, t, "m"), m);
}

void summarize_audit(Summary& summary, const std::vector<StepReport>& reports, double c0,
                     double c) {
  const EntropyAudit audit = entropy_inequality_monitor(reports, c0, c);
  summary.set("audit_c0", c0);
  summary.set("audit_c", c);
  summary.set("audit_violations", static_cast<int>(audit.violations.size()));
  summary.set("audit_max_excess", audit.max_excess);
  summary.set("audit_max_envelope_ratio", audit.max_envelope_ratio);
}

int audit_status(const std::vector<StepReport>& reports, double c0, double c) {
  return entropy_inequality_monitor(reports, c0, c).clean() ? 0 : 1;
}

struct NormRecorder {
  const SpinState* reference;
  std::vector<std::pair<double, double>> history;
  void operator()(double t, const SpinState& n, const Vec3Field&) {
    history.emplace_back(t, l2_distance(n, *reference));
  }
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  ScenarioSetup s = build_scenario(cfg);
  ScenarioResult out;
  Summary& summary = out.summary;
  summary.set("mode", cfg.mode);

  const double c0 = cfg.entropy_c0 >= 0.0 ? cfg.entropy_c0
                                          : s.params.min_D() / (1.0 + s.params.max_abs_p());

  if (cfg.mode == "equilibrium") {
    const Equilibrium eq = solve_equilibrium(s.params, s.mobility, s.dirichlet.n[0], s.VD);
    write_scalar_snapshot(cfg.output_dir + "/equilibrium_n0.txt", eq.n0_eq);
    write_scalar_snapshot(cfg.output_dir + "/equilibrium_V.txt", eq.V_eq);
    write_scalar_snapshot(cfg.output_dir + "/equilibrium_u.txt", eq.u_eq);
    write_scalar_snapshot(cfg.output_dir + "/equilibrium_curl.txt", eq.curl_residual);
    summary.set("gummel_sweeps", eq.gummel_sweeps);
    summary.set("curl_l2", eq.curl_l2);
    summary.set("zero_flux_linf", eq.zero_flux_linf);
    summary.set("smallness", eq.smallness);
    summary.set("n0_eq_min", eq.n0_eq.values.minCoeff());
    summary.set("n0_eq_max", eq.n0_eq.values.maxCoeff());
    out.status = eq.n0_eq.all_finite() && eq.n0_eq.values.minCoeff() > 0.0 ? 0 : 1;
    summary.write(cfg.output_dir + "/summary.txt");
    return out;
  }

  TransportStepper stepper(s.grid, s.params, s.mobility, s.dirichlet, s.VD, s.solver);

  if (cfg.mode == "transient" || cfg.mode == "residual_audit") {
    DiagnosticsCsv csv(cfg.output_dir + "/diagnostics.csv");
    summary.set("m_exchange_energy_initial", exchange_energy(s.m0.m));

    // residual audit bookkeeping: previous accepted state and magnetization
    struct AuditRow {
      double t;
      double residual_linf;
      SourceBoundReport bound;
    };
    std::vector<AuditRow> audit_rows;
    SpinState prev_state = s.initial;
    Vec3Field prev_m = s.m0.m;
    int accepted = 0;
    const bool audit = cfg.mode == "residual_audit";

    StateObserver on_state = [&](double t, const SpinState& n, const Vec3Field& m) {
      ++accepted;
      if (audit && accepted % cfg.residual_sample_every == 0) {
        const ScalarField V = solve_poisson(n.n[0], s.params, s.VD);
        const FieldSolution field = drift_velocity(V, s.mobility);
        const Vec3Field* mp = cfg.llg_frozen ? nullptr : &prev_m;
        const DiagResidual r = diag_residual(n, prev_state, m, mp, field, s.params, cfg.h);
        const SourceBoundReport b = source_bound_check(n, prev_state, m, mp, field, s.params, cfg.h);
        audit_rows.push_back({t, r.interior_linf(), b});
      }
      prev_state = n;
      prev_m = m;
    };

    const TransientResult res =
        run_transient(s.initial, s.m0, cfg.llg_frozen, cfg.T, stepper, cfg.snapshot_every,
                      [&csv](const StepReport& r) { csv.write(r); }, on_state);

    for (const auto& sample : res.samples)
      if (cfg.snapshot_every > 0) write_state_snapshot(cfg.output_dir, sample.t, sample.state, sample.m);

    const Norms fn = norms(res.final_state);
    summary.set("final_l2", fn.l2);
    summary.set("final_linf", fn.linf);
    summary.set("final_h1_semi", fn.h1_semi);
    summary.set("entropy_final", res.reports.back().entropy_after);
    double min_n0 = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (const auto& r : res.reports) {
      min_n0 = std::min(min_n0, r.min_n0);
      vmax = std::max(vmax, r.vmax);
    }
    summary.set("min_n0_overall", min_n0);
    summary.set("vmax_overall", vmax);
    summary.set("mass_final", res.reports.back().mass);
    summary.set("m_modulus_defect", res.final_m.modulus_defect());
    summarize_audit(summary, res.reports, c0, cfg.entropy_c);

    out.status = audit_status(res.reports, c0, cfg.entropy_c);
    if (vmax > s.mobility.vsat + 1e-12) out.status = 1;
    if (res.final_m.modulus_defect() > 1e-12) out.status = 1;

    if (audit) {
      summary.set("residual_samples", static_cast<int>(audit_rows.size()));
      if (!audit_rows.empty()) {
        double rmax = 0.0, ratio = 0.0;
        bool dominated = true;
        for (const auto& row : audit_rows) {
          rmax = std::max(rmax, row.residual_linf);
          ratio = std::max(ratio, row.bound.max_ratio);
          dominated = dominated && row.bound.dominated;
        }
        summary.set("residual_linf_max", rmax);
        summary.set("residual_linf_final", audit_rows.back().residual_linf);
        summary.set("source_bound_c", audit_rows.back().bound.c);
        summary.set("source_bound_max_ratio", ratio);
        summary.set("source_bound_dominated", dominated ? "true" : "false");
        if (!dominated) out.status = 1;
      }
    }
    summary.write(cfg.output_dir + "/summary.txt");
    return out;
  }

  if (cfg.mode == "oracle_compare") {
    // primal path with frozen constant m
    const Eigen::Vector3d mvec = s.m0.m.values.col(0);
    const int nsteps = std::max(1, static_cast<int>(std::llround(cfg.T / cfg.h)));
    const int every = cfg.snapshot_every > 0 ? cfg.snapshot_every : std::max(1, nsteps / 10);

    DiagnosticsCsv csv(cfg.output_dir + "/diagnostics.csv");
    const TransientResult primal =
        run_transient(s.initial, s.m0, true, cfg.T, stepper, every,
                      [&csv](const StepReport& r) { csv.write(r); });

    DecoupledStepper dstepper(s.grid, s.params, s.mobility, s.dirichlet, s.VD, s.solver, mvec);
    const Vec3Field mfield = constant_m_field(s.grid, mvec);
    const DiagState dinit = to_diag_state(s.initial, mfield);
    const DecoupledResult dual = solve_decoupled_constant_m(dinit, mvec, cfg.T, dstepper, every);

    double max_disc = 0.0;
    const std::size_t nsamp = std::min(primal.samples.size(), dual.samples.size());
    for (std::size_t k = 1; k < nsamp; ++k) {
      const SpinState back = from_diag_state(dual.samples[k].state, mfield);
      const double d = l2_distance(primal.samples[k].state, back);
      max_disc = std::max(max_disc, d);
      char key[48];
      std::snprintf(key, sizeof(key), "discrepancy_t%.6f", primal.samples[k].t);
      summary.set(key, d);
    }
    summary.set("oracle_l2_discrepancy", max_disc);
    summarize_audit(summary, primal.reports, c0, cfg.entropy_c);
    out.status = (max_disc <= 1e-6 ? 0 : 1) | audit_status(primal.reports, c0, cfg.entropy_c);
    summary.write(cfg.output_dir + "/summary.txt");
    return out;
  }

  if (cfg.mode == "decay_study") {
    const Equilibrium eq = solve_equilibrium(s.params, s.mobility, s.dirichlet.n[0], s.VD);
    SpinState eq_state(s.grid);
    eq_state.n[0] = eq.n0_eq;

    SpinState start(s.grid);
    start.n[0].values = eq.n0_eq.values + make_field(s.grid, cfg.perturb_n0).values;
    start.n[1] = make_field(s.grid, cfg.perturb_n1);
    start.n[2] = make_field(s.grid, cfg.perturb_n2);
    start.n[3] = make_field(s.grid, cfg.perturb_n3);

    NormRecorder recorder{&eq_state, {}};
    recorder.history.emplace_back(0.0, l2_distance(start, eq_state));

    DiagnosticsCsv csv(cfg.output_dir + "/diagnostics.csv");
    const TransientResult res = run_transient(
        start, s.m0, true, cfg.T, stepper, cfg.snapshot_every,
        [&csv](const StepReport& r) { csv.write(r); },
        [&recorder](double t, const SpinState& n, const Vec3Field& m) { recorder(t, n, m); });

    const DecayFit fit = decay_analysis(recorder.history, eq, cfg.decay_window_skip);
    summary.set("k1", fit.k1);
    summary.set("k2", fit.k2);
    summary.set("r2", fit.r2);
    summary.set("smallness", fit.smallness);
    summary.set("fitted", fit.fitted ? "true" : "false");
    summary.set("fit_reliable", fit.reliable ? "true" : "false");
    summary.set("monotone_upticks", fit.upticks);
    summary.set("norm_initial", recorder.history.front().second);
    summary.set("norm_final", recorder.history.back().second);
    if (cfg.decay_estimate_threshold)
      summary.set("threshold_estimate", estimate_decay_threshold(cfg));
    else
      summary.set("threshold_estimate", "nan");
    summarize_audit(summary, res.reports, c0, cfg.entropy_c);
    out.status = audit_status(res.reports, c0, cfg.entropy_c);
    summary.write(cfg.output_dir + "/summary.txt");
    return out;
  }

  throw std::invalid_argument("run_scenario: unhandled mode " + cfg.mode);
}

double estimate_decay_threshold(const ScenarioConfig& cfg, int bisection_steps) {
  // coarsened clone of the scenario; only vsat varies
  ScenarioConfig probe = cfg;
  probe.nx = probe.ny = 17;
  probe.T = std::min(probe.T, 1.0);
  probe.h = std::max(probe.h, 5e-3);
  probe.snapshot_every = 0;
  probe.decay_estimate_threshold = false;

  auto decays = [&probe](double vsat) {
    ScenarioConfig c = probe;
    c.vsat = vsat;
    ScenarioSetup s = build_scenario(c);
    const Equilibrium eq = solve_equilibrium(s.params, s.mobility, s.dirichlet.n[0], s.VD);
    SpinState eq_state(s.grid);
    eq_state.n[0] = eq.n0_eq;
    SpinState start(s.grid);
    start.n[0].values = eq.n0_eq.values + make_field(s.grid, c.perturb_n0).values;
    start.n[1] = make_field(s.grid, c.perturb_n1);
    start.n[2] = make_field(s.grid, c.perturb_n2);
    start.n[3] = make_field(s.grid, c.perturb_n3);
    TransportStepper stepper(s.grid, s.params, s.mobility, s.dirichlet, s.VD, s.solver);
    NormRecorder recorder{&eq_state, {}};
    recorder.history.emplace_back(0.0, l2_distance(start, eq_state));
    try {
      run_transient(start, s.m0, true, c.T, stepper, 0, {},
                    [&recorder](double t, const SpinState& n, const Vec3Field& m) {
                      recorder(t, n, m);
                    });
    } catch (const std::exception&) {
      return std::make_pair(false, 0.0);
    }
    const DecayFit fit = decay_analysis(recorder.history, eq, c.decay_window_skip);
    const bool ok = !fit.fitted || (fit.upticks == 0 && fit.k2 > 0.0);
    return std::make_pair(ok, fit.smallness);
  };

  double lo = cfg.vsat, hi = cfg.vsat;
  auto [ok0, small0] = decays(lo);
  if (!ok0) return small0;  // already past the threshold; report where we are
  double last_good = small0;
  for (int k = 0; k < 8; ++k) {
    hi *= 4.0;
    auto [ok, small] = decays(hi);
    if (!ok) break;
    lo = hi;
    last_good = small;
    if (k == 7) return last_good;  // no failure found; lower bound
  }
  for (int k = 0; k < bisection_steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    auto [ok, small] = decays(mid);
    if (ok) {
      lo = mid;
      last_good = small;
    } else {
      hi = mid;
    }
  }
  return last_good;
}

}  // namespace spindrift
