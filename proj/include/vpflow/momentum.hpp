#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "vpflow/grid.hpp"
#include "vpflow/linsolve.hpp"
#include "vpflow/operators.hpp"
#include "vpflow/rheology.hpp"

namespace vpflow {

// ---------------------------------------------------------------------------
// Velocity boundary conditions.
// ---------------------------------------------------------------------------

enum class VelBcKind { noslip, inflow, outflow, freeslip };

struct VelocityBoundarySpec {
  VelBcKind left = VelBcKind::noslip;
  VelBcKind right = VelBcKind::noslip;
  VelBcKind bottom = VelBcKind::noslip;
  VelBcKind top = VelBcKind::noslip;
  // u at the left-side u faces, one value per row; required for inflow.
  std::vector<double> inflow_profile;

  bool has_outflow() const { return right == VelBcKind::outflow; }

  void validate(const Grid& g) const {
    if (bottom == VelBcKind::inflow || bottom == VelBcKind::outflow ||
        top == VelBcKind::inflow || top == VelBcKind::outflow)
      throw config_error("velocity bc: top/bottom sides must be walls (noslip or freeslip)");
    if (left == VelBcKind::outflow) throw config_error("velocity bc: outflow must be the right side");
    if (right == VelBcKind::inflow) throw config_error("velocity bc: inflow must be the left side");
    if (left == VelBcKind::inflow) {
      if (static_cast<int>(inflow_profile.size()) != g.ny)
        throw config_error("velocity bc: inflow profile must have ny values");
      if (right != VelBcKind::outflow)
        throw config_error("velocity bc: an inflow requires an outflow on the right side");
    }
  }
};

// Tangential ghost treatment derived from the side kinds (wall tangential
// velocities are zero for every supported kind).
inline TangentialBc tangential_bc(const VelocityBoundarySpec& bc) {
  TangentialBc t;
  auto kind_of = [](VelBcKind k) {
    return (k == VelBcKind::outflow || k == VelBcKind::freeslip) ? TangentialKind::zero_gradient
                                                                 : TangentialKind::dirichlet;
  };
  t.left.kind = kind_of(bc.left);
  t.right.kind = kind_of(bc.right);
  t.bottom.kind = kind_of(bc.bottom);
  t.top.kind = kind_of(bc.top);
  return t;
}

// Write boundary-face values into the arrays (normal components).
inline void apply_boundary_values(StaggeredVelocity& vel, const VelocityBoundarySpec& bc) {
  const Grid& g = vel.grid;
  for (int j = 0; j < g.ny; ++j)
    vel.u(0, j) = (bc.left == VelBcKind::inflow) ? bc.inflow_profile[j] : 0.0;
  for (int j = 0; j < g.ny; ++j)
    vel.u(g.nx, j) = (bc.right == VelBcKind::outflow) ? vel.u(g.nx - 1, j) : 0.0;
  for (int i = 0; i < g.nx; ++i) {
    vel.v(i, 0) = 0.0;
    vel.v(i, g.ny) = 0.0;
  }
}

// Uniform additive correction on the outflow faces so that the net boundary
// flux vanishes.
inline void correct_outflow_flux(StaggeredVelocity& vel, const VelocityBoundarySpec& bc) {
  if (!bc.has_outflow()) return;
  const Grid& g = vel.grid;
  double influx = 0.0;
  for (int j = 0; j < g.ny; ++j) influx += vel.u(0, j) * g.hy;
  for (int i = 0; i < g.nx; ++i) influx += (vel.v(i, 0) - vel.v(i, g.ny)) * g.hx;
  double outflux = 0.0;
  for (int j = 0; j < g.ny; ++j) outflux += vel.u(g.nx, j) * g.hy;
  const double corr = (influx - outflux) / (g.ny * g.hy);
  for (int j = 0; j < g.ny; ++j) vel.u(g.nx, j) += corr;
}

// ---------------------------------------------------------------------------
// Dual multiplier for the yield projection, collocated at both tensor site
// families so the unit-ball projection is pointwise.
// ---------------------------------------------------------------------------

struct DualMultiplier {
  Field c11, c22, c12;  // cell centers
  Field k11, k22, k12;  // corners

  DualMultiplier() = default;
  explicit DualMultiplier(const Grid& g)
      : c11(g.nx, g.ny, 0.0),
        c22(g.nx, g.ny, 0.0),
        c12(g.nx, g.ny, 0.0),
        k11(g.nx + 1, g.ny + 1, 0.0),
        k22(g.nx + 1, g.ny + 1, 0.0),
        k12(g.nx + 1, g.ny + 1, 0.0) {}

  double max_mag() const {
    double m = 0.0;
    for (int j = 0; j < c11.ny(); ++j)
      for (int i = 0; i < c11.nx(); ++i)
        m = std::max(m, tensor_mag(c11(i, j), c22(i, j), c12(i, j)));
    for (int j = 0; j < k11.ny(); ++j)
      for (int i = 0; i < k11.nx(); ++i)
        m = std::max(m, tensor_mag(k11(i, j), k22(i, j), k12(i, j)));
    return m;
  }
};

struct MomentumState {
  Grid grid;
  StaggeredVelocity v_n, v_nm1;
  CellScalar p;
  CellScalar phi_prev;  // last pressure increment, used as the Poisson warm start
  SymTensorField sigma;
  DualMultiplier lambda;
  double t = 0.0;
  long step_index = 0;

  MomentumState() = default;
  explicit MomentumState(const Grid& g)
      : grid(g), v_n(g), v_nm1(g), p(g), phi_prev(g), sigma(g), lambda(g) {}
};

enum class StressMode { regularized, projection };

struct SolverMode {
  StressMode kind = StressMode::regularized;
  double eps = 1e-3;      // regularization length of the graph
  double r_uzawa = 1.0;   // dual ascent step
  int max_iters = 500;    // yield iterations per time step
  double tol = 1e-8;      // on the max multiplier increment
};

struct StepOptions {
  bool convection = true;
  double div_target = 1e-11;  // post-projection divergence bound actually enforced
  double helmholtz_rtol = 1e-10;
};

// ---------------------------------------------------------------------------
// Convection, conservative (divergence) form on MAC faces.
// ---------------------------------------------------------------------------

namespace detail {

// Corner flux u*v at corner (i,j), j in [1, ny-1].  Top/bottom wall corners
// carry zero flux (impermeable walls).
inline double corner_uv(const StaggeredVelocity& w, const VelocityBoundarySpec& bc, int i, int j) {
  const Grid& g = w.grid;
  const double ubar = 0.5 * (w.u(i, j) + w.u(i, j - 1));
  double vbar;
  if (i == 0)
    vbar = (bc.left == VelBcKind::outflow || bc.left == VelBcKind::freeslip) ? w.v(0, j) : 0.0;
  else if (i == g.nx)
    vbar = (bc.right == VelBcKind::outflow || bc.right == VelBcKind::freeslip) ? w.v(g.nx - 1, j)
                                                                               : 0.0;
  else
    vbar = 0.5 * (w.v(i - 1, j) + w.v(i, j));
  return ubar * vbar;
}

}  // namespace detail

// N(w) = div(w (x) w) evaluated at interior faces.
inline StaggeredVelocity convection(const StaggeredVelocity& w, const VelocityBoundarySpec& bc) {
  const Grid& g = w.grid;
  StaggeredVelocity out(g);

  Field uc(g.nx, g.ny), vc(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      uc(i, j) = 0.5 * (w.u(i, j) + w.u(i + 1, j));
      vc(i, j) = 0.5 * (w.v(i, j) + w.v(i, j + 1));
    }

  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double fe = uc(i, j) * uc(i, j);
      const double fw = uc(i - 1, j) * uc(i - 1, j);
      const double fn = (j + 1 <= g.ny - 1) ? detail::corner_uv(w, bc, i, j + 1) : 0.0;
      const double fs = (j >= 1) ? detail::corner_uv(w, bc, i, j) : 0.0;
      out.u(i, j) = (fe - fw) / g.hx + (fn - fs) / g.hy;
    }

  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double fe = detail::corner_uv(w, bc, i + 1, j);
      const double fw = detail::corner_uv(w, bc, i, j);
      const double fn = vc(i, j) * vc(i, j);
      const double fs = vc(i, j - 1) * vc(i, j - 1);
      out.v(i, j) = (fe - fw) / g.hx + (fn - fs) / g.hy;
    }
  return out;
}

// 2 N(v^n) - N(v^{n-1}).
inline StaggeredVelocity ab2_convection(const StaggeredVelocity& v_n,
                                        const StaggeredVelocity& v_nm1,
                                        const VelocityBoundarySpec& bc) {
  StaggeredVelocity a = convection(v_n, bc);
  const StaggeredVelocity b = convection(v_nm1, bc);
  for (int j = 0; j < a.u.ny(); ++j)
    for (int i = 0; i < a.u.nx(); ++i) a.u(i, j) = 2.0 * a.u(i, j) - b.u(i, j);
  for (int j = 0; j < a.v.ny(); ++j)
    for (int i = 0; i < a.v.nx(); ++i) a.v(i, j) = 2.0 * a.v(i, j) - b.v(i, j);
  return a;
}

// ---------------------------------------------------------------------------
// Implicit Helmholtz operators (coef * I - eta * Laplacian) per component.
// Boundary entries of the work arrays are kept at zero; Dirichlet neighbor
// values enter through the right-hand side.
// ---------------------------------------------------------------------------

namespace detail {

struct HelmholtzOpU {
  const Grid* g;
  double coef, eta;
  bool right_outflow;   // ghost = interior at i = nx
  bool bottom_dirichlet, top_dirichlet;  // tangential wall folds

  void apply(const Field& x, Field& y) const {
    const double ix2 = 1.0 / (g->hx * g->hx), iy2 = 1.0 / (g->hy * g->hy);
    const int nx = g->nx, ny = g->ny;
    for (int j = 0; j < ny; ++j) {
      y(0, j) = coef * x(0, j);
      y(nx, j) = coef * x(nx, j);
      for (int i = 1; i < nx; ++i) {
        double cx = 2.0;
        double acc = 0.0;
        if (i > 1) acc += x(i - 1, j);
        if (i < nx - 1)
          acc += x(i + 1, j);
        else if (right_outflow)
          cx -= 1.0;  // ghost = interior
        double cy = 2.0;
        double accy = 0.0;
        if (j > 0) accy += x(i, j - 1);
        else cy += bottom_dirichlet ? 1.0 : -1.0;
        if (j < ny - 1) accy += x(i, j + 1);
        else cy += top_dirichlet ? 1.0 : -1.0;
        y(i, j) = coef * x(i, j) + eta * ((cx * x(i, j) - acc) * ix2 + (cy * x(i, j) - accy) * iy2);
      }
    }
  }
};

struct HelmholtzOpV {
  const Grid* g;
  double coef, eta;
  bool right_outflow;                    // ghost = interior at east of i = nx-1
  bool left_dirichlet, right_dirichlet;  // tangential folds (dirichlet walls)
  bool left_freeslip, right_freeslip;

  void apply(const Field& x, Field& y) const {
    const double ix2 = 1.0 / (g->hx * g->hx), iy2 = 1.0 / (g->hy * g->hy);
    const int nx = g->nx, ny = g->ny;
    for (int i = 0; i < nx; ++i) {
      y(i, 0) = coef * x(i, 0);
      y(i, ny) = coef * x(i, ny);
    }
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double cx = 2.0;
        double accx = 0.0;
        if (i > 0) accx += x(i - 1, j);
        else cx += left_dirichlet ? 1.0 : -1.0;
        if (i < nx - 1) accx += x(i + 1, j);
        else cx += right_dirichlet ? 1.0 : -1.0;
        double accy = 0.0;
        if (j > 1) accy += x(i, j - 1);
        if (j < ny - 1) accy += x(i, j + 1);
        y(i, j) = coef * x(i, j) + eta * ((cx * x(i, j) - accx) * ix2 + (2.0 * x(i, j) - accy) * iy2);
      }
  }
};

}  // namespace detail

// Solves coef*v* - eta*Lap(v*) = rhs with the boundary treatment from bc,
// where rhs collects the BDF time terms, convection, -grad p, div sigma and f.
inline StaggeredVelocity predict_velocity(const MomentumState& state,
                                          const SymTensorField& sigma_force,
                                          const StaggeredVelocity* f, double dt,
                                          const PhysicalParams& params,
                                          const VelocityBoundarySpec& bc, double bdf_alpha,
                                          const StaggeredVelocity& conv,
                                          const StepOptions& opts) {
  if (!(dt > 0.0)) throw config_error("predict_velocity: dt must be > 0");
  const Grid& g = state.grid;
  bc.validate(g);
  const double coef = bdf_alpha * params.rho / dt;

  const StaggeredVelocity force = div_tensor(sigma_force);
  const StaggeredVelocity gp = gradient_p(state.p);

  // BDF time history term.
  auto hist_u = [&](int i, int j) {
    return bdf_alpha == 1.0 ? params.rho * state.v_n.u(i, j) / dt
                            : params.rho * (4.0 * state.v_n.u(i, j) - state.v_nm1.u(i, j)) /
                                  (2.0 * dt);
  };
  auto hist_v = [&](int i, int j) {
    return bdf_alpha == 1.0 ? params.rho * state.v_n.v(i, j) / dt
                            : params.rho * (4.0 * state.v_n.v(i, j) - state.v_nm1.v(i, j)) /
                                  (2.0 * dt);
  };

  const double ix2 = 1.0 / (g.hx * g.hx);

  // --- u component ---
  Field bu(g.nx + 1, g.ny, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      double r = hist_u(i, j) - params.rho * conv.u(i, j) - gp.u(i, j) + force.u(i, j);
      if (f) r += f->u(i, j);
      if (i == 1) {
        const double ub = (bc.left == VelBcKind::inflow) ? bc.inflow_profile[j] : 0.0;
        r += params.eta * ix2 * ub;
      }
      bu(i, j) = r;
    }

  detail::HelmholtzOpU Au{&g,
                          coef,
                          params.eta,
                          bc.right == VelBcKind::outflow,
                          bc.bottom != VelBcKind::freeslip,
                          bc.top != VelBcKind::freeslip};
  Field xu(g.nx + 1, g.ny, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) xu(i, j) = state.v_n.u(i, j);  // warm start
  CgOptions copt;
  copt.rtol = opts.helmholtz_rtol;
  SolveInfo iu = cg_solve(Au, bu, xu, copt);
  if (!iu.converged) throw solver_error("predict_velocity: u Helmholtz solve did not converge");

  // --- v component ---
  Field bv(g.nx, g.ny + 1, 0.0);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double r = hist_v(i, j) - params.rho * conv.v(i, j) - gp.v(i, j) + force.v(i, j);
      if (f) r += f->v(i, j);
      bv(i, j) = r;
    }
  detail::HelmholtzOpV Av{&g,
                          coef,
                          params.eta,
                          bc.right == VelBcKind::outflow,
                          bc.left == VelBcKind::noslip || bc.left == VelBcKind::inflow,
                          bc.right == VelBcKind::noslip,
                          bc.left == VelBcKind::freeslip,
                          bc.right == VelBcKind::freeslip};
  Field xv(g.nx, g.ny + 1, 0.0);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) xv(i, j) = state.v_n.v(i, j);
  SolveInfo iv = cg_solve(Av, bv, xv, copt);
  if (!iv.converged) throw solver_error("predict_velocity: v Helmholtz solve did not converge");

  StaggeredVelocity out(g);
  out.u = std::move(xu);
  out.v = std::move(xv);
  apply_boundary_values(out, bc);
  correct_outflow_flux(out, bc);
  if (!out.all_finite()) throw solver_error("predict_velocity: non-finite velocity");
  return out;
}

// Pressure projection: solve Lap(phi) = coef * div(v*), correct the velocity
// and accumulate the pressure increment.
inline std::pair<StaggeredVelocity, CellScalar> pressure_correct(
    const StaggeredVelocity& v_star, MomentumState& state, double dt, const PhysicalParams& params,
    const VelocityBoundarySpec& bc, const PoissonSolver& poisson, double bdf_alpha,
    const StepOptions& opts) {
  const Grid& g = state.grid;
  const double coef = bdf_alpha * params.rho / dt;

  CellScalar div = divergence(v_star);
  if (!bc.has_outflow()) {
    double total = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) total += div(i, j);
    total *= g.cell_area();
    const double vmax = std::max(v_star.u.max_abs(), v_star.v.max_abs());
    if (std::abs(total) > 1e-8 * std::max(1.0, vmax) * (g.Lx * g.Ly))
      throw solver_error("pressure_correct: incompatible boundary fluxes (net flux through a closed boundary)");
  }

  Field b(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) b(i, j) = -coef * div(i, j);

  Field phi = state.phi_prev.values;  // warm start
  const double target_inf = 0.9 * opts.div_target * coef;
  SolveInfo info = poisson.solve(b, phi, target_inf, 1e-13, 500);
  if (!info.converged && info.inf_residual > coef * 1e-8)
    throw solver_error("pressure_correct: pressure Poisson solve did not converge");

  StaggeredVelocity v_new = v_star;
  const double sx = 1.0 / (coef * g.hx), sy = 1.0 / (coef * g.hy);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) v_new.u(i, j) -= sx * (phi(i, j) - phi(i - 1, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v_new.v(i, j) -= sy * (phi(i, j) - phi(i, j - 1));
  if (bc.has_outflow())
    for (int j = 0; j < g.ny; ++j) v_new.u(g.nx, j) += 2.0 * sx * phi(g.nx - 1, j);

  CellScalar p_new = state.p;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) p_new(i, j) += phi(i, j);

  state.phi_prev.values = std::move(phi);
  return {std::move(v_new), std::move(p_new)};
}

// ---------------------------------------------------------------------------
// Bingham stress updates.
// ---------------------------------------------------------------------------

struct StressUpdate {
  SymTensorField sigma;
  double max_increment = 0.0;    // projection mode: max |lambda' - lambda|
  double plastic_site_sum = 0.0; // sum over sites of sigma:D (constitutive pairing)
  double yield_overshoot = 0.0;  // max over sites of (|sigma| - q)^+
};

// sigma = q D / (|D| + eps) at every tensor storage site.
inline StressUpdate regularized_stress_field(const CellScalar& q, const SymTensorField& D,
                                             double eps) {
  if (!(eps > 0.0)) throw config_error("regularized stress: eps must be > 0");
  const Grid& g = D.grid;
  StressUpdate out;
  out.sigma = SymTensorField(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const SymTensor2 Dc{D.d11(i, j), D.d22(i, j), corners_to_center(D.d12, i, j)};
      const double m = Dc.mag();
      const double fac = q(i, j) / (m + eps);
      out.sigma.d11(i, j) = fac * Dc.a11;
      out.sigma.d22(i, j) = fac * Dc.a22;
      out.plastic_site_sum += fac * m * m;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const SymTensor2 Dk{centers_to_corner(D.d11, i, j), centers_to_corner(D.d22, i, j),
                          D.d12(i, j)};
      const double m = Dk.mag();
      const double fac = centers_to_corner(q.values, i, j) / (m + eps);
      out.sigma.d12(i, j) = fac * Dk.a12;
      out.plastic_site_sum += fac * m * m;
    }
  return out;
}

inline SymTensorField bingham_update_regularized(const CellScalar& q, const StaggeredVelocity& v,
                                                 double eps,
                                                 const TangentialBc& tbc = TangentialBc{}) {
  return regularized_stress_field(q, sym_gradient(v, tbc), eps).sigma;
}

// One dual step: lambda' = P_unit(lambda + r * D), sigma' = q * lambda'.
// The multiplier is updated in place.
inline StressUpdate bingham_update_projection(const CellScalar& q, const SymTensorField& D,
                                              DualMultiplier& lambda, double r_uzawa) {
  if (!(r_uzawa > 0.0)) throw config_error("bingham_update_projection: r_uzawa must be > 0");
  const Grid& g = D.grid;
  StressUpdate out;
  out.sigma = SymTensorField(g);
  double inc = 0.0;

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const SymTensor2 Dc{D.d11(i, j), D.d22(i, j), corners_to_center(D.d12, i, j)};
      SymTensor2 A{lambda.c11(i, j) + r_uzawa * Dc.a11, lambda.c22(i, j) + r_uzawa * Dc.a22,
                   lambda.c12(i, j) + r_uzawa * Dc.a12};
      const double m = A.mag();
      if (m > 1.0) A = A * (1.0 / m);
      const SymTensor2 dd{A.a11 - lambda.c11(i, j), A.a22 - lambda.c22(i, j),
                          A.a12 - lambda.c12(i, j)};
      inc = std::max(inc, dd.mag());
      lambda.c11(i, j) = A.a11;
      lambda.c22(i, j) = A.a22;
      lambda.c12(i, j) = A.a12;
      const double qc = q(i, j);
      out.sigma.d11(i, j) = qc * A.a11;
      out.sigma.d22(i, j) = qc * A.a22;
      out.plastic_site_sum += qc * A.dot(Dc);
      out.yield_overshoot = std::max(out.yield_overshoot, qc * (A.mag() - 1.0));
    }

  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const SymTensor2 Dk{centers_to_corner(D.d11, i, j), centers_to_corner(D.d22, i, j),
                          D.d12(i, j)};
      SymTensor2 A{lambda.k11(i, j) + r_uzawa * Dk.a11, lambda.k22(i, j) + r_uzawa * Dk.a22,
                   lambda.k12(i, j) + r_uzawa * Dk.a12};
      const double m = A.mag();
      if (m > 1.0) A = A * (1.0 / m);
      const SymTensor2 dd{A.a11 - lambda.k11(i, j), A.a22 - lambda.k22(i, j),
                          A.a12 - lambda.k12(i, j)};
      inc = std::max(inc, dd.mag());
      lambda.k11(i, j) = A.a11;
      lambda.k22(i, j) = A.a22;
      lambda.k12(i, j) = A.a12;
      const double qk = centers_to_corner(q.values, i, j);
      out.sigma.d12(i, j) = qk * A.a12;
      out.plastic_site_sum += qk * A.dot(Dk);
      out.yield_overshoot = std::max(out.yield_overshoot, qk * (A.mag() - 1.0));
    }

  out.max_increment = inc;
  return out;
}

// ---------------------------------------------------------------------------
// Full time step.
// ---------------------------------------------------------------------------

struct StepDiagnostics {
  double div_max = 0.0;
  double plastic_site_sum = 0.0;  // constitutive pairing, unweighted site sum
  long n_sites = 0;
  double plastic_rate = 0.0;  // integral sigma : D(v^{n+1}) dA
  double viscous_rate = 0.0;  // eta * integral |grad v^{n+1}|^2 dA
  double forcing_rate = 0.0;  // integral f . v^{n+1} dA
  int uzawa_iters = 0;
  bool uzawa_converged = true;
  double yield_overshoot = 0.0;
};

// eta * sum |grad v|^2 dA with the same wall closures as sym_gradient.
inline double viscous_dissipation_rate(const StaggeredVelocity& vel, const TangentialBc& tbc,
                                       double eta) {
  const Grid& g = vel.grid;
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dudx = (vel.u(i + 1, j) - vel.u(i, j)) / g.hx;
      const double dvdy = (vel.v(i, j + 1) - vel.v(i, j)) / g.hy;
      acc += dudx * dudx + dvdy * dvdy;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double dudy;
      if (j == 0)
        dudy = tbc.bottom.kind == TangentialKind::dirichlet
                   ? 2.0 * (vel.u(i, 0) - tbc.bottom.value(i)) / g.hy
                   : 0.0;
      else if (j == g.ny)
        dudy = tbc.top.kind == TangentialKind::dirichlet
                   ? 2.0 * (tbc.top.value(i) - vel.u(i, g.ny - 1)) / g.hy
                   : 0.0;
      else
        dudy = (vel.u(i, j) - vel.u(i, j - 1)) / g.hy;
      double dvdx;
      if (i == 0)
        dvdx = tbc.left.kind == TangentialKind::dirichlet
                   ? 2.0 * (vel.v(0, j) - tbc.left.value(j)) / g.hx
                   : 0.0;
      else if (i == g.nx)
        dvdx = tbc.right.kind == TangentialKind::dirichlet
                   ? 2.0 * (tbc.right.value(j) - vel.v(g.nx - 1, j)) / g.hx
                   : 0.0;
      else
        dvdx = (vel.v(i, j) - vel.v(i - 1, j)) / g.hx;
      acc += dudy * dudy + dvdx * dvdx;
    }
  return eta * acc * g.cell_area();
}

inline StepDiagnostics step(MomentumState& state, const CellScalar& p_f,
                            const StaggeredVelocity* f, double dt, const PhysicalParams& params,
                            const SolverMode& mode, const VelocityBoundarySpec& bc,
                            const PoissonSolver& poisson, const StepOptions& opts = {}) {
  const Grid& g = state.grid;
  require_same_grid(g, p_f.grid, "momentum step");
  const double bdf_alpha = state.step_index == 0 ? 1.0 : 1.5;
  const TangentialBc tbc = tangential_bc(bc);

  const CellScalar p_s = solid_pressure_field(g, params);
  const CellScalar q = yield_field(p_f, p_s, params);

  const StaggeredVelocity conv =
      opts.convection
          ? (state.step_index == 0 ? convection(state.v_n, bc)
                                   : ab2_convection(state.v_n, state.v_nm1, bc))
          : StaggeredVelocity(g);

  StepDiagnostics diag;
  diag.n_sites = static_cast<long>(g.nx) * g.ny + static_cast<long>(g.nx + 1) * (g.ny + 1);

  StaggeredVelocity v_star(g);
  StressUpdate su;
  if (mode.kind == StressMode::regularized) {
    su = regularized_stress_field(q, sym_gradient(state.v_n, tbc), mode.eps);
    v_star = predict_velocity(state, su.sigma, f, dt, params, bc, bdf_alpha, conv, opts);
    diag.uzawa_iters = 0;
    diag.uzawa_converged = true;
  } else {
    StaggeredVelocity v_iter = state.v_n;
    double inc = 0.0;
    int it = 0;
    for (it = 0; it < mode.max_iters; ++it) {
      const SymTensorField D = sym_gradient(v_iter, tbc);
      su = bingham_update_projection(q, D, state.lambda, mode.r_uzawa);
      inc = su.max_increment;
      v_iter = predict_velocity(state, su.sigma, f, dt, params, bc, bdf_alpha, conv, opts);
      if (inc <= mode.tol) {
        ++it;
        break;
      }
    }
    diag.uzawa_iters = it;
    diag.uzawa_converged = inc <= mode.tol;
    v_star = std::move(v_iter);
  }
  diag.plastic_site_sum = su.plastic_site_sum;
  diag.yield_overshoot = su.yield_overshoot;

  auto [v_new, p_new] = pressure_correct(v_star, state, dt, params, bc, poisson, bdf_alpha, opts);
  if (!v_new.all_finite() || !p_new.values.all_finite())
    throw solver_error("momentum step: non-finite state after projection");

  const CellScalar div = divergence(v_new);
  diag.div_max = div.values.max_abs();
  if (diag.div_max > 1e-8)
    throw solver_error("momentum step: divergence bound violated after projection");

  const SymTensorField D_new = sym_gradient(v_new, tbc);
  diag.plastic_rate = ip_tensor(su.sigma, D_new);
  diag.viscous_rate = viscous_dissipation_rate(v_new, tbc, params.eta);
  if (f) diag.forcing_rate = ip_faces(*f, v_new);

  state.v_nm1 = std::move(state.v_n);
  state.v_n = std::move(v_new);
  state.p = std::move(p_new);
  state.sigma = std::move(su.sigma);
  state.t += dt;
  state.step_index += 1;
  return diag;
}

inline StepDiagnostics bootstrap_first_step(MomentumState& state, const CellScalar& p_f,
                                            const StaggeredVelocity* f, double dt,
                                            const PhysicalParams& params, const SolverMode& mode,
                                            const VelocityBoundarySpec& bc,
                                            const PoissonSolver& poisson,
                                            const StepOptions& opts = {}) {
  if (state.step_index != 0)
    throw contract_error("bootstrap_first_step: state is not at step 0");
  return step(state, p_f, f, dt, params, mode, bc, poisson, opts);
}

}  // namespace vpflow
