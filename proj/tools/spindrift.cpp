#include "spindrift/config.hpp"
#include "spindrift/diagnostics.hpp"
#include "spindrift/io.hpp"
#include "spindrift/scenario.hpp"
#include "spindrift/spin_algebra.hpp"
#include "spindrift/stencil.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sys/wait.h>
#include <unistd.h>

namespace {

using namespace spindrift;

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
  ScenarioConfig cfg;
  try {
    cfg = parse_config_file(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  try {
    const ScenarioResult res = run_scenario(cfg);
    std::cout << "scenario " << cfg.mode << " finished, status " << res.status << "\n";
    std::cout << "outputs in " << cfg.output_dir << "\n";
    return res.status;
  } catch (const std::exception& e) {
    std::filesystem::create_directories(cfg.output_dir);
    Summary failure;
    failure.set("mode", cfg.mode);
    failure.set("status", 1);
    failure.set("error", e.what());
    failure.write(cfg.output_dir + "/failure.txt");
    std::cerr << "scenario failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const std::string& self, const std::string& config_path, const std::string& vary,
              const std::vector<std::string>& overrides) {
  const auto eq = vary.find('=');
  if (eq == std::string::npos) {
    std::cerr << "--vary expects key=a,b,c\n";
    return 2;
  }
  const std::string key = vary.substr(0, eq);
  std::vector<std::string> values;
  {
    std::string rest = vary.substr(eq + 1);
    std::size_t pos = 0;
    while (pos != std::string::npos) {
      const auto comma = rest.find(',', pos);
      values.push_back(rest.substr(pos, comma == std::string::npos ? comma : comma - pos));
      pos = comma == std::string::npos ? comma : comma + 1;
    }
  }
  ScenarioConfig base;
  try {
    base = parse_config_file(config_path);
    for (const auto& o : overrides) apply_override(base, o);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  // one independent process per parameter value
  std::vector<pid_t> children;
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::string subdir = base.output_dir + "/sweep_" + std::to_string(k);
    const pid_t pid = fork();
    if (pid
 == 0) {
      std::vector<std::string> args = {self, "run", config_path};
      for (const auto& o : overrides) {
        args.push_back("--override");
        args.push_back(o);
      }
      args.push_back("--override");
      args.push_back(key + "=" + values[k]);
      args.push_back("--override");
      args.push_back("output.dir=" + subdir);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      execv(self.c_str(), argv.data());
      _exit(127);
    }
    children.push_back(pid);
  }
  int status = 0;
  for (pid_t pid : children) {
    int st = 0;
    waitpid(pid, &st, 0);
    if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) status = 1;
  }
  return status;
}

bool report(const char* what, bool ok, double measured) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << what << " (" << measured << ")\n";
  return ok;
}

int cmd_verify() {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_m = [&] {
    Eigen::Vector3d m{unit(rng), unit(rng), unit(rng)};
    while (m.norm() < 1e-3) m = {unit(rng), unit(rng), unit(rng)};
    return Eigen::Vector3d(m.normalized());
  };
  bool ok = true;

  // spectral decomposition of the diffusion matrix
  double worst_eig = 0.0, worst_proj = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double D = 0.1 + 2.0 * std::abs(unit(rng));
    const double p = 0.95 * unit(rng);
    const Eigen::Vector3d m = random_m();
    const Eigen::Matrix4d A = assemble_diffusion_matrix(D, p, m);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(A);
    const double eta = std::sqrt(1.0 - p * p);
    Eigen::Vector4d expect{D / (1.0 + p), D / (1.0 - p), D / eta, D / eta};
    std::sort(expect.data(), expect.data() + 4);
    worst_eig = std::max(worst_eig, (es.eigenvalues() - expect).cwiseAbs().maxCoeff());
    const SpinProjectors<double> P = projectors(m);
    worst_proj = std::max(
        worst_proj,
        (P.plus + P.minus + P.perp - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff());
    worst_proj = std::max(worst_proj, (P.plus * P.minus).cwiseAbs().maxCoeff());
  }
  ok &= report("spectral decomposition, 1000 random (D, p, m)", worst_eig <= 1e-12, worst_eig);
  ok &= report("projector partition and orthogonality", worst_proj <= 1e-13, worst_proj);

  // mobility admissibility
  try {
    certify_mobility(MobilityModel::caughey_thomas(1.0, 1.0));
    certify_mobility(MobilityModel::constant_saturated(1.0, 1.0));
    ok &= report("shipped mobility models admissible", true, 0.0);
  } catch (const AdmissibilityError& e) {
    std::cout << "FAIL shipped mobility models admissible: " << e.what() << "\n";
    ok = false;
  }
  bool rejected = false;
  try {
    certify_mobility([](double s) { return 1.0 + s; }, 1.0, 1.0);
  } catch (const AdmissibilityError&) {
    rejected = true;
  }
  ok &= report("broken mobility rejected", rejected, 0.0);

  // summation-by-parts pairing on interior-supported fields
  {
    const Grid2D g(33, 33, 1.0, 1.0);
    ScalarField f(g), w1(g), w2(g);
    for (int j = 3; j < g.ny - 3; ++j)
      for (int i = 3; i < g.nx - 3; ++i) {
        f(i, j) = unit(rng);
        w1(i, j) = unit(rng);
        w2(i, j) = unit(rng);
      }
    auto [fx, fy] = gradient(f);
    const ScalarField dv = divergence(w1, w2);
    const double pairing = (fx.values * w1.values + fy.values * w2.values).sum() +
                           (f.values * dv.values).sum();
    ok &= report("summation-by-parts adjointness", std::abs(pairing) * g.hx() * g.hy() <= 1e-10,
                 pairing);
  }

  // discrete Poincare constant on the unit square
  {
    const Grid2D g(33, 33, 1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      ScalarField f(g);
      for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) f(i, j) = unit(rng);
      const Norms nm = norms(f);
      worst = std::max(worst, nm.l2 * nm.l2 / (nm.h1_semi * nm.h1_semi));
    }
    const double bound = 1.0 / (2.0 * M_PI * M_PI) * 1.05;
    ok &= report("discrete Poincare constant", worst <= bound, worst);
  }

  // change of variables roundtrip
  {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector3d m = random_m();
      Eigen::Vector4d n{unit(rng), unit(rng), unit(rng), unit(rng)};
      auto [np, nm_, nperp] = to_diag(n, m);
      const Eigen::Vector4d back = from_diag(np, nm_, nperp, m);
      worst = std::max(worst, (back - n).cwiseAbs().maxCoeff());
    }
    ok &= report("diagonalizing change of variables roundtrip", worst <= 1e-13, worst);
  }

  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("SPINDRIFT_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));

  CLI::App app{"spindrift: 2D spin-polarized drift-diffusion simulator"};
  app.require_subcommand(1);

  std::string config_path, vary;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "execute one scenario");
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--override", overrides, "section.key=value overrides");

  CLI::App* sweep = app.add_subcommand("sweep", "fan out a parameter sweep");
  sweep->add_option("config", config_path, "scenario config file")->required();
  sweep->add_option("--vary", vary, "section.key=a,b,c")->required();
  sweep->add_option("--override", overrides, "section.key=value overrides");

  CLI::App* verify = app.add_subcommand("verify", "run the built-in invariant suites");
  (void)verify;

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("run")) return cmd_run(config_path, overrides);
  if (app.got_subcommand("sweep")) return cmd_sweep(argv[0], config_path, vary, overrides);
  if (app.got_subcommand("verify")) return cmd_verify();
  return 2;
}
