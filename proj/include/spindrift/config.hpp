#ifndef SPINDRIFT_CONFIG_HPP
#define SPINDRIFT_CONFIG_HPP

#include "spindrift/grid.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spindrift {

/// Configuration rejected; carries every violated constraint, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Named analytic profile: a plain number means a constant; otherwise
/// name(key=value, ...) with names
///   sine(base, amp, kx, ky)    base + amp sin(kx pi x / lx) sin(ky pi y / ly)
///   cosine(base, amp, kx, ky)  base + amp cos(kx pi x / lx) cos(ky pi y / ly)
///   gauss(base, amp, x0, y0, sigma)
///   linear(base, gx, gy)       base + gx x + gy y
struct Profile {
  std::string name = "const";
  std::map<std::string, double> args;

  double eval(double x, double y, double lx, double ly) const;
  std::string dump() const;

  bool is_constant() const { return name == "const"; }
  double constant_value() const { return args.at("value"); }

  static Profile constant(double v);
  static Profile parse(const std::string& text);  // throws std::invalid_argument
};

/// Magnetization profile: constant(mx,my,mz) or
/// tilt(ax, ay, kx, ky): normalize((ax f, ay f, 1)) with
/// f = cos(kx pi x / lx) cos(ky pi y / ly), which is Neumann-compatible.
struct MagnetizationProfile {
  std::string name = "constant";
  std::map<std::string, double> args;

  Eigen::Vector3d eval(double x, double y, double lx, double ly) const;
  std::string dump() const;
  bool is_constant() const { return name == "constant"; }

  static MagnetizationProfile parse(const std::string& text);
};

struct ScenarioConfig {
  // [grid]
  int nx = 33, ny = 33;
  double lx = 1.0, ly = 1.0;
  // [time]
  double h = 1e-3;
  double T = 0.1;
  int snapshot_every = 0;
  // [material]
  Profile D = Profile::constant(1.0);
  Profile p = Profile::constant(0.0);
  Profile C = Profile::constant(2.0);
  double tau = 1.0;  // +inf allowed
  double gamma = 0.0;
  double lambdaD = 1.0;
  // [mobility]
  std::string mobility_kind = "caughey_thomas";  // or constant_saturated
  double mu0 = 1.0;
  double vsat = 1.0;
  // [llg]
  MagnetizationProfile m_profile;
  bool llg_frozen = true;
  double llg_dt_cap_factor = 0.2;
  // [initial] densities
  Profile n0 = Profile::constant(1.0);
  Profile n1 = Profile::constant(0.0);
  Profile n2 = Profile::constant(0.0);
  Profile n3 = Profile::constant(0.0);
  // [boundary] traces; default to the matching initial profile
  Profile bc_n0, bc_n1, bc_n2, bc_n3;
  Profile bc_V = Profile::constant(0.0);
  bool bc_from_initial = true;  // true until any boundary density key appears
  // [run]
  std::string mode = "transient";
  // [output]
  std::string output_dir = "out";
  // [solver]
  double fp_tol = 1e-9;
  int fp_max = 50;
  double damping = 1.0;
  double cg_tol = 1e-12;
  std::string face_average = "arithmetic";  // or harmonic
  int retries = 4;
  // [entropy]
  double entropy_c0 = -1.0;  // auto
  double entropy_c = 20.0;
  // [decay]
  Profile perturb_n0 = Profile::constant(0.0);
  Profile perturb_n1 = Profile::constant(0.0);
  Profile perturb_n2 = Profile::constant(0.0);
  Profile perturb_n3 = Profile::constant(0.0);
  double decay_window_skip = 0.05;
  bool decay_estimate_threshold = false;
  // [residual]
  int residual_sample_every = 10;
};

/// Parse + validate sectioned key=value text. Collects every violation.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

/// Apply "section.key=value" overrides on top of a parsed config.
void apply_override(ScenarioConfig& cfg, const std::string& assignment);

/// Echo-dump: emits a config text that parses back to an equivalent config.
std::string dump_config(const ScenarioConfig& cfg);

}  // namespace spindrift

#endif
