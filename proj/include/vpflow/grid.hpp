#pragma once

#include <string>

#include "vpflow/array2d.hpp"
#include "vpflow/errors.hpp"

namespace vpflow {

// Uniform Cartesian MAC staggered grid.
//   u : (nx+1) x ny   at vertical cell faces   (i*hx, (j+1/2)*hy)
//   v : nx x (ny+1)   at horizontal cell faces ((i+1/2)*hx, j*hy)
//   cell scalars : nx x ny at centers
//   corner scalars : (nx+1) x (ny+1) at cell corners
struct Grid {
  int nx = 0, ny = 0;
  double Lx = 0.0, Ly = 0.0;
  double hx = 0.0, hy = 0.0;

  Grid() = default;
  Grid(int nx_, int ny_, double Lx_, double Ly_)
      : nx(nx_), ny(ny_), Lx(Lx_), Ly(Ly_), hx(Lx_ / nx_), hy(Ly_ / ny_) {
    if (nx < 4 || ny < 4) throw contract_error("Grid: nx and ny must be >= 4");
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw contract_error("Grid: domain lengths must be positive");
  }

  double cell_x(int i) const { return (i + 0.5) * hx; }
  double cell_y(int j) const { return (j + 0.5) * hy; }
  double corner_x(int i) const { return i * hx; }
  double corner_y(int j) const { return j * hy; }
  double uface_x(int i) const { return i * hx; }
  double uface_y(int j) const { return (j + 0.5) * hy; }
  double vface_x(int i) const { return (i + 0.5) * hx; }
  double vface_y(int j) const { return j * hy; }

  double cell_area() const { return hx * hy; }

  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && Lx == o.Lx && Ly == o.Ly;
  }
};

struct CellScalar {
  Grid grid;
  Field values;

  CellScalar() = default;
  explicit CellScalar(const Grid& g, double fill = 0.0) : grid(g), values(g.nx, g.ny, fill) {}

  double& operator()(int i, int j) { return values(i, j); }
  double operator()(int i, int j) const { return values(i, j); }
};

struct StaggeredVelocity {
  Grid grid;
  Field u;  // (nx+1) x ny
  Field v;  // nx x (ny+1)

  StaggeredVelocity() = default;
  explicit StaggeredVelocity(const Grid& g)
      : grid(g), u(g.nx + 1, g.ny, 0.0), v(g.nx, g.ny + 1, 0.0) {}

  bool all_finite() const { return u.all_finite() && v.all_finite(); }
};

// Symmetric 2x2 tensor field on the MAC layout: diagonal entries at cell
// centers, the off-diagonal entry at cell corners.
struct SymTensorField {
  Grid grid;
  Field d11;  // nx x ny
  Field d22;  // nx x ny
  Field d12;  // (nx+1) x (ny+1)

  SymTensorField() = default;
  explicit SymTensorField(const Grid& g)
      : grid(g), d11(g.nx, g.ny, 0.0), d22(g.nx, g.ny, 0.0), d12(g.nx + 1, g.ny + 1, 0.0) {}

  bool all_finite() const { return d11.all_finite() && d22.all_finite() && d12.all_finite(); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const std::string& where) {
  if (!(a == b)) throw contract_error(where + ": fields live on different grids");
}

}  // namespace vpflow
