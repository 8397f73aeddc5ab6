#pragma once

#include <algorithm>
#include <cmath>

#include "vpflow/grid.hpp"
#include "vpflow/linsolve.hpp"
#include "vpflow/operators.hpp"
#include "vpflow/rheology.hpp"

namespace vpflow {

enum class PfBcKind { dirichlet, neumann0 };

struct PfBcSide {
  PfBcKind kind = PfBcKind::neumann0;
  double value = 0.0;

  static PfBcSide dirichlet(double v) {
    if (v < 0.0) throw config_error("pf boundary value must be >= 0");
    return {PfBcKind::dirichlet, v};
  }
  static PfBcSide neumann0() { return {}; }
};

struct PfBoundarySpec {
  PfBcSide left, right, bottom, top;

  static PfBoundarySpec all_dirichlet(double v) {
    PfBoundarySpec s;
    s.left = s.right = s.bottom = s.top = PfBcSide::dirichlet(v);
    return s;
  }
  static PfBoundarySpec all_neumann0() { return {}; }
};

// Per-cell clamp to [lo, hi].
inline CellScalar truncate_initial(const CellScalar& p, double lo, double hi) {
  if (lo > hi) throw config_error("truncate_initial: lo > hi");
  CellScalar out = p;
  for (int j = 0; j < p.grid.ny; ++j)
    for (int i = 0; i < p.grid.nx; ++i) out(i, j) = std::clamp(p(i, j), lo, hi);
  return out;
}

// dt * max over cells of (|u|/hx + |v|/hy), with |u| the larger of the two
// face magnitudes.  Callers require <= 1 before advancing.
inline double advective_cfl(const StaggeredVelocity& vel, double dt) {
  const Grid& g = vel.grid;
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double au = std::max(std::abs(vel.u(i, j)), std::abs(vel.u(i + 1, j)));
      const double av = std::max(std::abs(vel.v(i, j)), std::abs(vel.v(i, j + 1)));
      const double c = au / g.hx + av / g.hy;
      if (c > m) m = c;
    }
  return dt * m;
}

namespace detail {

// I + K*dt*(-Laplacian) with ghost folding per side kind.
struct DiffusionOp {
  const Grid* g;
  const PfBoundarySpec* bc;
  double kdt;

  double diag(int i, int j) const {
    const double ix2 = 1.0 / (g->hx * g->hx), iy2 = 1.0 / (g->hy * g->hy);
    double d = 1.0;
    d += kdt * ((i > 0) ? ix2 : (bc->left.kind == PfBcKind::dirichlet ? 2.0 * ix2 : 0.0));
    d += kdt * ((i < g->nx - 1) ? ix2 : (bc->right.kind == PfBcKind::dirichlet ? 2.0 * ix2 : 0.0));
    d += kdt * ((j > 0) ? iy2 : (bc->bottom.kind == PfBcKind::dirichlet ? 2.0 * iy2 : 0.0));
    d += kdt * ((j < g->ny - 1) ? iy2 : (bc->top.kind == PfBcKind::dirichlet ? 2.0 * iy2 : 0.0));
    return d;
  }

  void apply(const Field& x, Field& y) const {
    const double ix2 = 1.0 / (g->hx * g->hx), iy2 = 1.0 / (g->hy * g->hy);
    for (int j = 0; j < g->ny; ++j)
      for (int i = 0; i < g->nx; ++i) {
        double acc = diag(i, j) * x(i, j);
        if (i > 0) acc -= kdt * ix2 * x(i - 1, j);
        if (i < g->nx - 1) acc -= kdt * ix2 * x(i + 1, j);
        if (j > 0) acc -= kdt * iy2 * x(i, j - 1);
        if (j < g->ny - 1) acc -= kdt * iy2 * x(i, j + 1);
        y(i, j) = acc;
      }
  }
};

}  // namespace detail

// One transport step: explicit donor-cell upwind advection followed by
// implicit backward-Euler diffusion.  The advection update is written as a
// convex combination whose coefficients sum to one by construction, and the
// diffusion matrix is an M-matrix, so the discrete maximum principle over
// {current values} u {Dirichlet values} holds at every step.
inline CellScalar advance_pf(const CellScalar& p_f, const StaggeredVelocity& vel, double dt,
                             const PhysicalParams& params, const PfBoundarySpec& bc) {
  const Grid& g = p_f.grid;
  require_same_grid(g, vel.grid, "advance_pf");
  if (!(dt > 0.0)) throw config_error("advance_pf: dt must be > 0");
  if (params.K < 0.0) throw config_error("advance_pf: K must be >= 0");

  const double cx = dt / g.hx, cy = dt / g.hy;
  CellScalar star(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double cW = cx * std::max(vel.u(i, j), 0.0);
      const double cE = cx * std::max(-vel.u(i + 1, j), 0.0);
      const double cS = cy * std::max(vel.v(i, j), 0.0);
      const double cN = cy * std::max(-vel.v(i, j + 1), 0.0);
      const double c0 = 1.0 - (cW + cE + cS + cN);
      if (c0 < 0.0)
        throw cfl_error("advance_pf: advective CFL violated (incoming coefficients exceed 1)");
      const double pc = p_f(i, j);
      const double dW =
          (i > 0) ? p_f(i - 1, j) : (bc.left.kind == PfBcKind::dirichlet ? bc.left.value : pc);
      const double dE = (i < g.nx - 1)
                            ? p_f(i + 1, j)
                            : (bc.right.kind == PfBcKind::dirichlet ? bc.right.value : pc);
      const double dS =
          (j > 0) ? p_f(i, j - 1) : (bc.bottom.kind == PfBcKind::dirichlet ? bc.bottom.value : pc);
      const double dN = (j < g.ny - 1)
                            ? p_f(i, j + 1)
                            : (bc.top.kind == PfBcKind::dirichlet ? bc.top.value : pc);
      star(i, j) = c0 * pc + cW * dW + cE * dE + cS * dS + cN * dN;
    }

  const double kdt = params.K * dt;
  if (kdt == 0.0) return star;

  detail::DiffusionOp A{&g, &bc, kdt};
  Field rhs = star.values;
  const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
  if (bc.left.kind == PfBcKind::dirichlet)
    for (int j = 0; j < g.ny; ++j) rhs(0, j) += kdt * 2.0 * ix2 * bc.left.value;
  if (bc.right.kind == PfBcKind::dirichlet)
    for (int j = 0; j < g.ny; ++j) rhs(g.nx - 1, j) += kdt * 2.0 * ix2 * bc.right.value;
  if (bc.bottom.kind == PfBcKind::dirichlet)
    for (int i = 0; i < g.nx; ++i) rhs(i, 0) += kdt * 2.0 * iy2 * bc.bottom.value;
  if (bc.top.kind == PfBcKind::dirichlet)
    for (int i = 0; i < g.nx; ++i) rhs(i, g.ny - 1) += kdt * 2.0 * iy2 * bc.top.value;

  CellScalar out = star;  // warm start at the advected field
  const double diag_scale = 1.0 + kdt * 2.0 * (ix2 + iy2);
  CgOptions opt;
  opt.rtol = 1e-14;
  opt.atol_inf = 2e-14 * diag_scale * std::max(1.0, rhs.max_abs());
  opt.max_iters = static_cast<int>(10 * rhs.size());
  SolveInfo info = cg_solve(A, rhs, out.values, opt);
  if (!info.converged && info.inf_residual > 1e-10 * diag_scale * std::max(1.0, rhs.max_abs()))
    throw solver_error("advance_pf: diffusion solve did not converge");
  return out;
}

}  // namespace vpflow
