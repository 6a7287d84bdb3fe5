#include "spindrift/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace spindrift {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

Grid2D infer_grid(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::size_t nx = 1;
  while (nx < xs.size() && xs[nx] > xs[nx - 1]) ++nx;
  if (nx < 3 || xs.size() % nx != 0)
    throw std::runtime_error("snapshot: cannot infer grid layout");
  const int ny = static_cast<int>(xs.size() / nx);
  return Grid2D(static_cast<int>(nx), ny, xs[nx - 1], ys.back());
}

}  // namespace

void write_scalar_snapshot(const std::string& path, const ScalarField& f) {
  std::ofstream out = open_out(path);
  const Grid2D& g = f.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out << format_double(g.x(i)) << ' ' << format_double(g.y(j)) << ' '
          << format_double(f(i, j)) << '\n';
}

void write_vec3_snapshot(const std::string& path, const Vec3Field& f) {
  std::ofstream out = open_out(path);
  const Grid2D& g = f.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto v = f(i, j);
      out << format_double(g.x(i)) << ' ' << format_double(g.y(j)) << ' ' << format_double(v[0])
          << ' ' << format_double(v[1]) << ' ' << format_double(v[2]) << '\n';
    }
}

ScalarField read_scalar_snapshot(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<double> xs, ys, vs;
  double x, y, v;
  while (in >> x >> y >> v) {
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  const Grid2D g = infer_grid(xs, ys);
  ScalarField f(g);
  for (Eigen::Index k = 0; k < g.size(); ++k) f.values[k] = vs[k];
  return f;
}

Vec3Field read_vec3_snapshot(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<double> xs, ys;
  std::vector<Eigen::Vector3d> vs;
  double x, y, a, b, c;
  while (in >> x >> y >> a >> b >> c) {
    xs.push_back(x);
    ys.push_back(y);
    vs.emplace_back(a, b, c);
  }
  const Grid2D g = infer_grid(xs, ys);
  Vec3Field f(g);
  for (Eigen::Index k = 0; k < g.size(); ++k) f.values.col(k) = vs[k];
  return f;
}

struct DiagnosticsCsv::Impl {
  std::ofstream out;
};

const char* DiagnosticsCsv::header() {
  return "t,S,dS_dt_discrete,dissipation,inequality_slack,fp_iters,min_n0,mass,vmax";
}

DiagnosticsCsv::DiagnosticsCsv(const std::string& path) : impl_(std::make_unique<Impl>()) {
  impl_->out = open_out(path);
  impl_->out << header() << '\n';
}

DiagnosticsCsv::~DiagnosticsCsv() = default;

void DiagnosticsCsv::write(const StepReport& r) {
  const double dSdt = (r.entropy_after - r.entropy_before) / r.h;
  impl_->out << format_double(r.t) << ',' << format_double(r.entropy_after) << ','
             << format_double(dSdt) << ',' << format_double(r.entropy_dissipation) << ','
             << format_double(r.inequality_slack) << ',' << r.fp_iters << ','
             << format_double(r.min_n0) << ',' << format_double(r.mass) << ','
             << format_double(r.vmax) << '\n';
}

std::vector<StepReport> read_diagnostics_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty diagnostics csv: " + path);
  if (line != DiagnosticsCsv::header()) throw std::runtime_error("unexpected diagnostics csv header in " + path);

  std::vector<StepReport> rows;
  double prev_t = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::array<double, 9> f{};
    for (int c = 0; c < 9; ++c) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short diagnostics row in " + path);
      f[c] = std::stod(tok);
    }
    StepReport r;
    r.t = f[0];
    r.h = r.t - prev_t;
    r.entropy_after = f[1];
    r.entropy_before = f[1] - f[2] * r.h;
    r.entropy_dissipation = f[3];
    r.inequality_slack = f[4];
    r.fp_iters = static_cast<int>(f[5]);
    r.min_n0 = f[6];
    r.mass = f[7];
    r.vmax = f[8];
    prev_t = r.t;
    rows.push_back(r);
  }
  return rows;
}

void Summary::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void Summary::set(const std::string& key, double value) { set(key, format_double(value)); }
void Summary::set(const std::string& key, int value) { set(key, std::to_string(value)); }

void Summary::write(const std::string& path) const {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

std::map<std::string, std::string> read_summary(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    std::string v = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(k);
    trim(v);
    kv[k] = v;
  }
  return kv;
}

}  // namespace spindrift
