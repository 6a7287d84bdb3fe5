#ifndef SPINDRIFT_IO_HPP
#define SPINDRIFT_IO_HPP

#include "spindrift/diagnostics.hpp"
#include "spindrift/grid.hpp"

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace spindrift {

/// Shortest round-trippable decimal rendering of a double (%.17g trimmed).
std::string format_double(double v);

/// Plain-text snapshots: "x y value" rows (scalar) or "x y v1 v2 v3"
/// (vector), row-major over nodes.
void write_scalar_snapshot(const std::string& path, const ScalarField& f);
void write_vec3_snapshot(const std::string& path, const Vec3Field& f);

/// Readers infer the grid from the coordinate columns.
ScalarField read_scalar_snapshot(const std::string& path);
Vec3Field read_vec3_snapshot(const std::string& path);

/// Streaming writer for the per-step diagnostics CSV with the fixed schema
/// t,S,dS_dt_discrete,dissipation,inequality_slack,fp_iters,min_n0,mass,vmax.
class DiagnosticsCsv {
 public:
  explicit DiagnosticsCsv(const std::string& path);
  ~DiagnosticsCsv();
  void write(const StepReport& r);
  static const char* header();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<StepReport> read_diagnostics_csv(const std::string& path);

/// Key-value summary files, "key = value" per line, keys in insertion order.
class Summary {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);
  void write(const std::string& path) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::map<std::string, std::string> read_summary(const std::string& path);

}  // namespace spindrift

#endif
