#pragma once

#include <cmath>
#include <vector>

#include "vpflow/grid.hpp"

namespace vpflow {

enum class Side { left, right, bottom, top };

// ---------------------------------------------------------------------------
// Boundary descriptions used by the discrete operators.
// ---------------------------------------------------------------------------

enum class ScalarBcKind { dirichlet, neumann0 };

struct ScalarBcSide {
  ScalarBcKind kind = ScalarBcKind::neumann0;
  std::vector<double> values;  // boundary trace, one value per boundary cell

  static ScalarBcSide neumann0() { return {}; }
  static ScalarBcSide dirichlet(double c, int n) {
    ScalarBcSide s;
    s.kind = ScalarBcKind::dirichlet;
    s.values.assign(n, c);
    return s;
  }
  static ScalarBcSide dirichlet(std::vector<double> vals) {
    ScalarBcSide s;
    s.kind = ScalarBcKind::dirichlet;
    s.values = std::move(vals);
    return s;
  }
};

struct ScalarBc {
  ScalarBcSide left, right, bottom, top;

  static ScalarBc all_neumann0() { return {}; }
  static ScalarBc all_dirichlet(double c, const Grid& g) {
    ScalarBc bc;
    bc.left = ScalarBcSide::dirichlet(c, g.ny);
    bc.right = ScalarBcSide::dirichlet(c, g.ny);
    bc.bottom = ScalarBcSide::dirichlet(c, g.nx);
    bc.top = ScalarBcSide::dirichlet(c, g.nx);
    return bc;
  }

  void validate(const Grid& g) const {
    auto check = [](const ScalarBcSide& s, int n, const char* name) {
      if (s.kind == ScalarBcKind::dirichlet && static_cast<int>(s.values.size()) != n)
        throw config_error(std::string("ScalarBc: dirichlet value count mismatch on side ") + name);
    };
    check(left, g.ny, "left");
    check(right, g.ny, "right");
    check(bottom, g.nx, "bottom");
    check(top, g.nx, "top");
  }
};

// Tangential-velocity treatment at a boundary, used to close d12 at wall
// corners.  dirichlet reflects through the prescribed wall value
// (ghost = 2*wall - interior), zero_gradient copies the interior value.
enum class TangentialKind { dirichlet, zero_gradient };

struct TangentialBcSide {
  TangentialKind kind = TangentialKind::dirichlet;
  std::vector<double> wall;  // tangential wall values at corner stations; empty = zeros

  double value(int k) const { return wall.empty() ? 0.0 : wall[k]; }
};

struct TangentialBc {
  // bottom/top hold u at x = i*hx (nx+1 stations); left/right hold v at
  // y = j*hy (ny+1 stations).
  TangentialBcSide left, right, bottom, top;
};

// ---------------------------------------------------------------------------
// MAC discrete operators.
// ---------------------------------------------------------------------------

// (u_{i+1,j}-u_{i,j})/hx + (v_{i,j+1}-v_{i,j})/hy at each cell.
inline CellScalar divergence(const StaggeredVelocity& vel) {
  const Grid& g = vel.grid;
  if (vel.u.nx() != g.nx + 1 || vel.u.ny() != g.ny || vel.v.nx() != g.nx || vel.v.ny() != g.ny + 1)
    throw contract_error("divergence: velocity arrays do not match grid");
  CellScalar out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (vel.u(i + 1, j) - vel.u(i, j)) / g.hx + (vel.v(i, j + 1) - vel.v(i, j)) / g.hy;
  return out;
}

// Symmetric velocity gradient: d11, d22 at centers, d12 at corners.
// Wall corners close du/dy, dv/dx through the tangential bc.
inline SymTensorField sym_gradient(const StaggeredVelocity& vel, const TangentialBc& bc) {
  const Grid& g = vel.grid;
  SymTensorField D(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      D.d11(i, j) = (vel.u(i + 1, j) - vel.u(i, j)) / g.hx;
      D.d22(i, j) = (vel.v(i, j + 1) - vel.v(i, j)) / g.hy;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double dudy;
      if (j == 0)
        dudy = bc.bottom.kind == TangentialKind::dirichlet
                   ? 2.0 * (vel.u(i, 0) - bc.bottom.value(i)) / g.hy
                   : 0.0;
      else if (j == g.ny)
        dudy = bc.top.kind == TangentialKind::dirichlet
                   ? 2.0 * (bc.top.value(i) - vel.u(i, g.ny - 1)) / g.hy
                   : 0.0;
      else
        dudy = (vel.u(i, j) - vel.u(i, j - 1)) / g.hy;

      double dvdx;
      if (i == 0)
        dvdx = bc.left.kind == TangentialKind::dirichlet
                   ? 2.0 * (vel.v(0, j) - bc.left.value(j)) / g.hx
                   : 0.0;
      else if (i == g.nx)
        dvdx = bc.right.kind == TangentialKind::dirichlet
                   ? 2.0 * (bc.right.value(j) - vel.v(g.nx - 1, j)) / g.hx
                   : 0.0;
      else
        dvdx = (vel.v(i, j) - vel.v(i - 1, j)) / g.hx;

      D.d12(i, j) = 0.5 * (dudy + dvdx);
    }
  return D;
}

inline SymTensorField sym_gradient(const StaggeredVelocity& vel) {
  return sym_gradient(vel, TangentialBc{});
}

// Row-wise divergence of a symmetric tensor, landing on velocity faces.
// Boundary faces receive 0 (they are governed by boundary conditions).
// Negative adjoint of sym_gradient for interior-supported fields.
inline StaggeredVelocity div_tensor(const SymTensorField& S) {
  const Grid& g = S.grid;
  StaggeredVelocity out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      out.u(i, j) =
          (S.d11(i, j) - S.d11(i - 1, j)) / g.hx + (S.d12(i, j + 1) - S.d12(i, j)) / g.hy;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) =
          (S.d12(i + 1, j) - S.d12(i, j)) / g.hx + (S.d22(i, j) - S.d22(i, j - 1)) / g.hy;
  return out;
}

// 5-point Laplacian with ghost cells from the scalar bc.
inline CellScalar laplacian_scalar(const CellScalar& s, const ScalarBc& bc) {
  const Grid& g = s.grid;
  bc.validate(g);
  CellScalar out(g);
  auto ghost = [](const ScalarBcSide& side, int k, double interior) {
    return side.kind == ScalarBcKind::dirichlet ? 2.0 * side.values[k] - interior : interior;
  };
  const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double c = s(i, j);
      const double w = (i > 0) ? s(i - 1, j) : ghost(bc.left, j, c);
      const double e = (i < g.nx - 1) ? s(i + 1, j) : ghost(bc.right, j, c);
      const double so = (j > 0) ? s(i, j - 1) : ghost(bc.bottom, i, c);
      const double no = (j < g.ny - 1) ? s(i, j + 1) : ghost(bc.top, i, c);
      out(i, j) = (e - 2.0 * c + w) * ix2 + (no - 2.0 * c + so) * iy2;
    }
  return out;
}

// Face-centered pressure gradient; boundary faces get 0.
inline StaggeredVelocity gradient_p(const CellScalar& p) {
  const Grid& g = p.grid;
  StaggeredVelocity out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) out.u(i, j) = (p(i, j) - p(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = (p(i, j) - p(i, j - 1)) / g.hy;
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation between storage sites and tensor magnitudes.
// ---------------------------------------------------------------------------

// Average of the four corner values surrounding cell (i,j).
inline double corners_to_center(const Field& d12, int i, int j) {
  return 0.25 * (d12(i, j) + d12(i + 1, j) + d12(i, j + 1) + d12(i + 1, j + 1));
}

// Average of the cell values adjacent to corner (i,j); 1, 2 or 4 cells exist.
inline double centers_to_corner(const Field& c, int i, int j) {
  const int nx = c.nx(), ny = c.ny();
  double sum = 0.0;
  int n = 0;
  for (int dj = -1; dj <= 0; ++dj)
    for (int di = -1; di <= 0; ++di) {
      const int ci = i + di, cj = j + dj;
      if (ci >= 0 && ci < nx && cj >= 0 && cj < ny) {
        sum += c(ci, cj);
        ++n;
      }
    }
  return sum / n;
}

// |A| = sqrt(A:A) with the off-diagonal entry counted twice.
inline double tensor_mag(double a11, double a22, double a12) {
  return std::sqrt(a11 * a11 + a22 * a22 + 2.0 * a12 * a12);
}

inline double tensor_mag_at_center(const SymTensorField& S, int i, int j) {
  return tensor_mag(S.d11(i, j), S.d22(i, j), corners_to_center(S.d12, i, j));
}

inline double tensor_mag_at_corner(const SymTensorField& S, int i, int j) {
  return tensor_mag(centers_to_corner(S.d11, i, j), centers_to_corner(S.d22, i, j), S.d12(i, j));
}

// Cell-centered |D| field.
inline CellScalar tensor_magnitude(const SymTensorField& S) {
  CellScalar out(S.grid);
  for (int j = 0; j < S.grid.ny; ++j)
    for (int i = 0; i < S.grid.nx; ++i) out(i, j) = tensor_mag_at_center(S, i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete inner products (the ones making gradient/divergence and
// sym_gradient/div_tensor negative adjoints of each other).
// ---------------------------------------------------------------------------

inline double ip_cells(const CellScalar& a, const CellScalar& b) {
  require_same_grid(a.grid, b.grid, "ip_cells");
  return dot(a.values, b.values) * a.grid.cell_area();
}

inline double ip_faces(const StaggeredVelocity& a, const StaggeredVelocity& b) {
  require_same_grid(a.grid, b.grid, "ip_faces");
  return (dot(a.u, b.u) + dot(a.v, b.v)) * a.grid.cell_area();
}

inline double ip_tensor(const SymTensorField& a, const SymTensorField& b) {
  require_same_grid(a.grid, b.grid, "ip_tensor");
  return (dot(a.d11, b.d11) + dot(a.d22, b.d22) + 2.0 * dot(a.d12, b.d12)) * a.grid.cell_area();
}

}  // namespace vpflow
