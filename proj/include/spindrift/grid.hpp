#ifndef SPINDRIFT_GRID_HPP
#define SPINDRIFT_GRID_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace spindrift {

/// Uniform node-centered grid on an axis-aligned rectangle [0,lx] x [0,ly].
/// Node (i,j) sits at (i*hx, j*hy); linear index is j*nx + i (x fastest).
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;

  Grid2D() = default;

  Grid2D(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    if (nx < 3 || ny < 3) throw std::invalid_argument("Grid2D: nx and ny must be >= 3");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("Grid2D: lx and ly must be positive");
  }

  double hx() const { return lx / (nx - 1); }
  double hy() const { return ly / (ny - 1); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(nx) * ny; }

  Eigen::Index idx(int i, int j) const { return static_cast<Eigen::Index>(j) * nx + i; }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }

  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.nx == b.nx && a.ny == b.ny && a.lx == b.lx && a.ly == b.ly;
  }
  friend bool operator!=(const Grid2D& a, const Grid2D& b) { return !(a == b); }
};

/// One real value per node, stored in grid index order.
struct ScalarField {
  Grid2D grid;
  Eigen::ArrayXd values;

  ScalarField() = default;

  explicit ScalarField(const Grid2D& g, double fill = 0.0)
      : grid(g), values(Eigen::ArrayXd::Constant(g.size(), fill)) {}

  ScalarField(const Grid2D& g, Eigen::ArrayXd v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("ScalarField: value count != nx*ny");
  }

  double& operator()(int i, int j) { return values[grid.idx(i, j)]; }
  double operator()(int i, int j) const { return values[grid.idx(i, j)]; }

  bool all_finite() const { return values.isFinite().all(); }
};

/// One real 3-vector per node, components as columns of a 3 x (nx*ny) matrix.
struct Vec3Field {
  Grid2D grid;
  Eigen::Matrix3Xd values;

  Vec3Field() = default;

  explicit Vec3Field(const Grid2D& g) : grid(g), values(Eigen::Matrix3Xd::Zero(3, g.size())) {}

  Eigen::Matrix3Xd::ColXpr operator()(int i, int j) { return values.col(grid.idx(i, j)); }
  Eigen::Matrix3Xd::ConstColXpr operator()(int i, int j) const { return values.col(grid.idx(i, j)); }

  ScalarField component(int k) const {
    ScalarField f(grid);
    f.values = values.row(k).transpose().array();
    return f;
  }

  void set_component(int k, const ScalarField& f) {
    if (f.grid != grid) throw std::invalid_argument("Vec3Field::set_component: grid mismatch");
    values.row(k) = f.values.matrix().transpose();
  }

  bool all_finite() const { return values.allFinite(); }
};

/// Boundary handling for the discrete Laplacian.
struct BoundaryKind {
  enum class Tag { DirichletTrace, NeumannZero };

  Tag tag = Tag::NeumannZero;
  ScalarField trace;  // read at boundary nodes only (DirichletTrace)

  static BoundaryKind neumann_zero() { return BoundaryKind{}; }

  static BoundaryKind dirichlet(ScalarField t) {
    BoundaryKind b;
    b.tag = Tag::DirichletTrace;
    b.trace = std::move(t);
    return b;
  }
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

}  // namespace spindrift

#endif
