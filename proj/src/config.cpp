#include "spindrift/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace spindrift {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  try {
    std::size_t pos = 0;
    out = std::stod(t, &pos);
    return pos == t.size();
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, int& out) {
  try {
    std::size_t pos = 0;
    out = std::stoi(trim(s), &pos);
    return pos == trim(s).size();
  } catch (...) {
    return false;
  }
}

bool parse_bool(const std::string& s, bool& out) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") {
    out = true;
    return true;
  }
  if (t == "false" || t == "0") {
    out = false;
    return true;
  }
  return false;
}

// shared name(key=value, ...) reader for the profile grammars
bool parse_call(const std::string& text, std::string& name, std::map<std::string, double>& args) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') return false;
  name = trim(t.substr(0, open));
  const std::string body = t.substr(open + 1, t.size() - open - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) return false;
    double v;
    if (!parse_double(item.substr(eq + 1), v)) return false;
    args[trim(item.substr(0, eq))] = v;
  }
  return !name.empty();
}

std::string dump_call(const std::string& name, const std::map<std::string, double>& args) {
  std::string out = name + "(";
  bool first = true;
  for (const auto& [k, v] : args) {
    if (!first) out += ", ";
    first = false;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s=%.17g", k.c_str(), v);
    out += buf;
  }
  out += ")";
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&violations] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

Profile Profile::constant(double v) {
  Profile p;
  p.name = "const";
  p.args["value"] = v;
  return p;
}

Profile Profile::parse(const std::string& text) {
  double v;
  if (parse_double(text, v)) return constant(v);

  Profile p;
  if (!parse_call(text, p.name, p.args))
    throw std::invalid_argument("malformed profile '" + trim(text) + "'");

  static const std::map<std::string, std::set<std::string>> known = {
      {"sine", {"base", "amp", "kx", "ky"}},
      {"cosine", {"base", "amp", "kx", "ky"}},
      {"gauss", {"base", "amp", "x0", "y0", "sigma"}},
      {"linear", {"base", "gx", "gy"}},
  };
  const auto it = known.find(p.name);
  if (it == known.end()) throw std::invalid_argument("unknown profile '" + p.name + "'");
  for (const auto& [k, v2] : p.args)
    if (!it->second.count(k))
      throw std::invalid_argument("profile '" + p.name + "' has no parameter '" + k + "'");
  for (const auto& k : it->second)
    if (!p.args.count(k)) p.args[k] = (k == "sigma") ? 0.1 : ((k == "kx" || k == "ky") ? 1.0 : 0.0);
  if (p.name == "gauss" && !(p.args.at("sigma") > 0.0))
    throw std::invalid_argument("gauss profile requires sigma > 0");
  return p;
}

double Profile::eval(double x, double y, double lx, double ly) const {
  if (name == "const") return args.at("value");
  if (name == "sine")
    return args.at("base") + args.at("amp") * std::sin(args.at("kx") * M_PI * x / lx) *
                                 std::sin(args.at("ky") * M_PI * y / ly);
  if (name == "cosine")
    return args.at("base") + args.at("amp") * std::cos(args.at("kx") * M_PI * x / lx) *
                                 std::cos(args.at("ky") * M_PI * y / ly);
  if (name == "gauss") {
    const double dx = x - args.at("x0"), dy = y - args.at("y0"), s = args.at("sigma");
    return args.at("base") + args.at("amp") * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
  }
  if (name == "linear") return args.at("base") + args.at("gx") * x + args.at("gy") * y;
  throw std::logic_error("unhandled profile " + name);
}

std::string Profile::dump() const {
  if (name == "const") {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", args.at("value"));
    return buf;
  }
  return dump_call(name, args);
}

MagnetizationProfile MagnetizationProfile::parse(const std::string& text) {
  MagnetizationProfile p;
  if (!parse_call(text, p.name, p.args))
    throw std::invalid_argument("malformed magnetization profile '" + trim(text) + "'");
  if (p.name == "constant") {
    for (const auto& [k, v] : p.args)
      if (k != "mx" && k != "my" && k != "mz")
        throw std::invalid_argument("constant magnetization has no parameter '" + k + "'");
    for (const char* k : {"mx", "my", "mz"})
      if (!p.args.count(k)) p.args[k] = 0.0;
    const Eigen::Vector3d v{p.args["mx"], p.args["my"], p.args["mz"]};
    if (v.norm() < 1e-12)
      throw std::invalid_argument("constant magnetization must be a nonzero vector");
  } else if (p.name == "tilt") {
    for (const auto& [k, v] : p.args)
      if (k != "ax" && k != "ay" && k != "kx" && k != "ky")
        throw std::invalid_argument("tilt magnetization has no parameter '" + k + "'");
    for (const char* k : {"ax", "ay"})
      if (!p.args.count(k)) p.args[k] = 0.0;
    for (const char* k : {"kx", "ky"})
      if (!p.args.count(k)) p.args[k] = 1.0;
  } else {
    throw std::invalid_argument("unknown magnetization profile '" + p.name + "'");
  }
  return p;
}

Eigen::Vector3d MagnetizationProfile::eval(double x, double y, double lx, double ly) const {
  if (name == "constant") {
    Eigen::Vector3d v{args.at("mx"), args.at("my"), args.at("mz")};
    return v.normalized();
  }
  // smoothed vortex-free tilt; depends on x only through a Neumann-compatible
  // scalar, so the normal derivative vanishes on the boundary
  const double f = std::cos(args.at("kx") * M_PI * x / lx) * std::cos(args.at("ky") * M_PI * y / ly);
  Eigen::Vector3d v{args.at("ax") * f, args.at("ay") * f, 1.0};
  return v.normalized();
}

std::string MagnetizationProfile::dump() const { return dump_call(name, args); }

namespace {

struct Assigner {
  ScenarioConfig& cfg;
  std::vector<std::string>& violations;
  bool boundary_seen = false;

  void fail(const std::string& key, const std::string& why) {
    violations.push_back("key '" + key + "': " + why);
  }

  void number(const std::string& key, const std::string& val, double& out) {
    if (!parse_double(val, out)) fail(key, "expected a number, got '" + val + "'");
  }
  void integer(const std::string& key, const std::string& val, int& out) {
    if (!parse_int(val, out)) fail(key, "expected an integer, got '" + val + "'");
  }
  void boolean(const std::string& key, const std::string& val, bool& out) {
    if (!parse_bool(val, out)) fail(key, "expected true/false, got '" + val + "'");
  }
  void profile(const std::string& key, const std::string& val, Profile& out) {
    try {
      out = Profile::parse(val);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  bool assign(const std::string& key, const std::string& val) {
    if (key == "grid.nx") integer(key, val, cfg.nx);
    else if (key == "grid.ny") integer(key, val, cfg.ny);
    else if (key == "grid.lx") number(key, val, cfg.lx);
    else if (key == "grid.ly") number(key, val, cfg.ly);
    else if (key == "time.h") number(key, val, cfg.h);
    else if (key == "time.T") number(key, val, cfg.T);
    else if (key == "time.snapshot_every") integer(key, val, cfg.snapshot_every);
    else if (key == "material.D") profile(key, val, cfg.D);
    else if (key == "material.p") profile(key, val, cfg.p);
    else if (key == "material.C") profile(key, val, cfg.C);
    else if (key == "material.tau") number(key, val, cfg.tau);
    else if (key == "material.gamma") number(key, val, cfg.gamma);
    else if (key == "material.lambdaD") number(key, val, cfg.lambdaD);
    else if (key == "mobility.kind") cfg.mobility_kind = trim(val);
    else if (key == "mobility.mu0") number(key, val, cfg.mu0);
    else if (key == "mobility.vsat") number(key, val, cfg.vsat);
    else if (key == "llg.profile") {
      try {
        cfg.m_profile = MagnetizationProfile::parse(val);
      } catch (const std::invalid_argument& e) {
        fail(key, e.what());
      }
    } else if (key == "llg.frozen") boolean(key, val, cfg.llg_frozen);
    else if (key == "llg.dt_cap_factor") number(key, val, cfg.llg_dt_cap_factor);
    else if (key == "initial.n0") profile(key, val, cfg.n0);
    else if (key == "initial.n1") profile(key, val, cfg.n1);
    else if (key == "initial.n2") profile(key, val, cfg.n2);
    else if (key == "initial.n3") profile(key, val, cfg.n3);
    else if (key == "boundary.n0") { profile(key, val, cfg.bc_n0); boundary_seen = true; }
    else if (key == "boundary.n1") { profile(key, val, cfg.bc_n1); boundary_seen = true; }
    else if (key == "boundary.n2") { profile(key, val, cfg.bc_n2); boundary_seen = true; }
    else if (key == "boundary.n3") { profile(key, val, cfg.bc_n3); boundary_seen = true; }
    else if (key == "boundary.V") profile(key, val, cfg.bc_V);
    else if (key == "run.mode") cfg.mode = trim(val);
    else if (key == "output.dir") cfg.output_dir = trim(val);
    else if (key == "solver.fp_tol") number(key, val, cfg.fp_tol);
    else if (key == "solver.fp_max") integer(key, val, cfg.fp_max);
    else if (key == "solver.damping") number(key, val, cfg.damping);
    else if (key == "solver.cg_tol") number(key, val, cfg.cg_tol);
    else if (key == "solver.face_average") cfg.face_average = trim(val);
    else if (key == "solver.retries") integer(key, val, cfg.retries);
    else if (key == "entropy.c0") {
      if (trim(val) == "auto") cfg.entropy_c0 = -1.0;
      else number(key, val, cfg.entropy_c0);
    } else if (key == "entropy.c") number(key, val, cfg.entropy_c);
    else if (key == "decay.perturb_n0") profile(key, val, cfg.perturb_n0);
    else if (key == "decay.perturb_n1") profile(key, val, cfg.perturb_n1);
    else if (key == "decay.perturb_n2") profile(key, val, cfg.perturb_n2);
    else if (key == "decay.perturb_n3") profile(key, val, cfg.perturb_n3);
    else if (key == "decay.window_skip") number(key, val, cfg.decay_window_skip);
    else if (key == "decay.estimate_threshold") boolean(key, val, cfg.decay_estimate_threshold);
    else if (key == "residual.sample_every") integer(key, val, cfg.residual_sample_every);
    else {
      fail(key, "unknown key");
      return false;
    }
    return true;
  }
};

void validate(const ScenarioConfig& cfg, std::vector<std::string>& violations) {
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) violations.push_back(msg);
  };
  require(cfg.nx >= 3 && cfg.ny >= 3, "grid.nx and grid.ny must be >= 3");
  require(cfg.lx > 0.0 && cfg.ly > 0.0, "grid.lx and grid.ly must be positive");
  require(cfg.h > 0.0, "time.h > 0 required");
  require(!(cfg.h > 0.0) || cfg.h <= cfg.T, "h <= T required");
  require(cfg.snapshot_every >= 0, "time.snapshot_every must be >= 0");
  require(cfg.tau > 0.0, "material.tau > 0 required");
  require(cfg.gamma >= 0.0, "material.gamma >= 0 required");
  require(cfg.lambdaD > 0.0, "material.lambdaD > 0 required");
  require(cfg.mobility_kind == "caughey_thomas" || cfg.mobility_kind == "constant_saturated",
          "mobility.kind must be caughey_thomas or constant_saturated");
  require(cfg.mu0 > 0.0, "mobility.mu0 > 0 required");
  require(cfg.vsat > 0.0, "mobility.vsat > 0 required");
  static const std::set<std::string> modes = {"transient", "equilibrium", "decay_study",
                                              "oracle_compare", "residual_audit"};
  require(modes.count(cfg.mode) > 0,
          "run.mode must be one of transient/equilibrium/decay_study/oracle_compare/residual_audit");
  require(cfg.fp_tol > 0.0, "solver.fp_tol > 0 required");
  require(cfg.fp_max >= 1, "solver.fp_max >= 1 required");
  require(cfg.damping > 0.0 && cfg.damping <= 1.0, "solver.damping must lie in (0, 1]");
  require(cfg.cg_tol > 0.0, "solver.cg_tol > 0 required");
  require(cfg.face_average == "arithmetic" || cfg.face_average == "harmonic",
          "solver.face_average must be arithmetic or harmonic");
  require(cfg.retries >= 0, "solver.retries >= 0 required");
  require(cfg.entropy_c >= 0.0, "entropy.c >= 0 required");
  require(cfg.decay_window_skip >= 0.0 && cfg.decay_window_skip < 1.0,
          "decay.window_skip must lie in [0, 1)");
  require(cfg.residual_sample_every >= 1, "residual.sample_every >= 1 required");
  require(cfg.llg_dt_cap_factor > 0.0, "llg.dt_cap_factor > 0 required");

  if (cfg.mode == "oracle_compare" && !cfg.m_profile.is_constant())
    violations.push_back("oracle_compare requires a constant magnetization profile");

  // admissibility of the material fields, sampled over the domain
  if (cfg.lx > 0.0 && cfg.ly > 0.0) {
    double pmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    const int ns = 65;
    for (int j = 0; j < ns; ++j)
      for (int i = 0; i < ns; ++i) {
        const double x = cfg.lx * i / (ns - 1), y = cfg.ly * j / (ns - 1);
        pmax = std::max(pmax, std::abs(cfg.p.eval(x, y, cfg.lx, cfg.ly)));
        dmin = std::min(dmin, cfg.D.eval(x, y, cfg.lx, cfg.ly));
      }
    require(pmax < 1.0, "sup|p| < 1 required");
    require(dmin > 0.0, "inf D > 0 required");
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::vector<std::string> violations;
  Assigner assigner{cfg, violations};

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        violations.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key =
        (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    assigner.assign(key, line.substr(eq + 1));
  }

  if (!assigner.boundary_seen) {
    cfg.bc_n0 = cfg.n0;
    cfg.bc_n1 = cfg.n1;
    cfg.bc_n2 = cfg.n2;
    cfg.bc_n3 = cfg.n3;
  } else {
    cfg.bc_from_initial = false;
    // unset boundary keys still default to the initial profile
    if (cfg.bc_n0.args.empty()) cfg.bc_n0 = cfg.n0;
    if (cfg.bc_n1.args.empty()) cfg.bc_n1 = cfg.n1;
    if (cfg.bc_n2.args.empty()) cfg.bc_n2 = cfg.n2;
    if (cfg.bc_n3.args.empty()) cfg.bc_n3 = cfg.n3;
  }

  validate(cfg, violations);
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError({"override '" + assignment + "': expected key=value"});
  std::vector<std::string> violations;
  Assigner assigner{cfg, violations};
  assigner.assign(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  validate(cfg, violations);
  if (!violations.empty()) throw ConfigError(std::move(violations));
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "[grid]\n"
      << "nx = " << cfg.nx << "\nny = " << cfg.ny << "\nlx = " << num(cfg.lx)
      << "\nly = " << num(cfg.ly) << "\n\n[time]\nh = " << num(cfg.h) << "\nT = " << num(cfg.T)
      << "\nsnapshot_every = " << cfg.snapshot_every << "\n\n[material]\nD = " << cfg.D.dump()
      << "\np = " << cfg.p.dump() << "\nC = " << cfg.C.dump() << "\ntau = " << num(cfg.tau)
      << "\ngamma = " << num(cfg.gamma) << "\nlambdaD = " << num(cfg.lambdaD)
      << "\n\n[mobility]\nkind = " << cfg.mobility_kind << "\nmu0 = " << num(cfg.mu0)
      << "\nvsat = " << num(cfg.vsat) << "\n\n[llg]\nprofile = " << cfg.m_profile.dump()
      << "\nfrozen = " << (cfg.llg_frozen ? "true" : "false")
      << "\ndt_cap_factor = " << num(cfg.llg_dt_cap_factor) << "\n\n[initial]\nn0 = "
      << cfg.n0.dump() << "\nn1 = " << cfg.n1.dump() << "\nn2 = " << cfg.n2.dump()
      << "\nn3 = " << cfg.n3.dump() << "\n\n[boundary]\nn0 = " << cfg.bc_n0.dump()
      << "\nn1 = " << cfg.bc_n1.dump() << "\nn2 = " << cfg.bc_n2.dump()
      << "\nn3 = " << cfg.bc_n3.dump() << "\nV = " << cfg.bc_V.dump()
      << "\n\n[run]\nmode = " << cfg.mode << "\n\n[output]\ndir = " << cfg.output_dir
      << "\n\n[solver]\nfp_tol = " << num(cfg.fp_tol) << "\nfp_max = " << cfg.fp_max
      << "\ndamping = " << num(cfg.damping) << "\ncg_tol = " << num(cfg.cg_tol)
      << "\nface_average = " << cfg.face_average << "\nretries = " << cfg.retries
      << "\n\n[entropy]\nc0 = " << (cfg.entropy_c0 < 0.0 ? std::string("auto") : num(cfg.entropy_c0))
      << "\nc = " << num(cfg.entropy_c) << "\n\n[decay]\nperturb_n0 = " << cfg.perturb_n0.dump()
      << "\nperturb_n1 = " << cfg.perturb_n1.dump() << "\nperturb_n2 = " << cfg.perturb_n2.dump()
      << "\nperturb_n3 = " << cfg.perturb_n3.dump()
      << "\nwindow_skip = " << num(cfg.decay_window_skip)
      << "\nestimate_threshold = " << (cfg.decay_estimate_threshold ? "true" : "false")
      << "\n\n[residual]\nsample_every = " << cfg.residual_sample_every << "\n";
  return out.str();
}

}  // namespace spindrift
