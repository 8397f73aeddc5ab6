#pragma once

#include <algorithm>
#include <cmath>

#include "vpflow/grid.hpp"
#include "vpflow/operators.hpp"

namespace vpflow {

// Symmetric 2x2 tensor value, (a11, a22, a12).
struct SymTensor2 {
  double a11 = 0.0, a22 = 0.0, a12 = 0.0;

  double dot(const SymTensor2& o) const { return a11 * o.a11 + a22 * o.a22 + 2.0 * a12 * o.a12; }
  double mag() const { return std::sqrt(dot(*this)); }

  SymTensor2 operator*(double s) const { return {a11 * s, a22 * s, a12 * s}; }
  SymTensor2 operator+(const SymTensor2& o) const { return {a11 + o.a11, a22 + o.a22, a12 + o.a12}; }
  SymTensor2 operator-(const SymTensor2& o) const { return {a11 - o.a11, a22 - o.a22, a12 - o.a12}; }
};

enum class PsMode { lithostatic, constant };

struct PhysicalParams {
  double rho = 1.0;    // density [kg/m^3]
  double eta = 1.0;    // Newtonian viscosity [Pa s]
  double q0 = 0.2;     // yield coefficient (multiplies the pressure deficit)
  double K = 0.1;      // pore-pressure diffusivity [m^2/s]
  double ps0 = 0.0;    // reference solid pressure at altitude y0 [Pa]
  double y0 = 0.0;     // reference altitude [m]
  double g_mag = 9.81; // |g| [m/s^2]
  PsMode ps_mode = PsMode::lithostatic;
  double ps_value = 1.0;  // used when ps_mode == constant

  void validate() const {
    if (!(rho > 0.0)) throw config_error("params: rho must be > 0");
    if (!(eta > 0.0)) throw config_error("params: eta must be > 0");
    if (q0 < 0.0) throw config_error("params: q0 must be >= 0");
    if (!(K > 0.0)) throw config_error("params: K must be > 0");
    if (g_mag < 0.0) throw config_error("params: g must be >= 0");
    if (ps0 < 0.0) throw config_error("params: ps0 must be >= 0");
  }
};

struct GraphSample {
  SymTensor2 sigma;
  SymTensor2 D;
  double q = 0.0;
};

// Lithostatic solid pressure ps0 + rho*|g|*(y0 - y); a fixed constant in
// constant mode.
inline double lithostatic_pressure(double y, const PhysicalParams& p) {
  if (p.ps_mode == PsMode::constant) return p.ps_value;
  return p.ps0 + p.rho * p.g_mag * (p.y0 - y);
}

inline CellScalar solid_pressure_field(const Grid& g, const PhysicalParams& p) {
  CellScalar ps(g);
  for (int j = 0; j < g.ny; ++j) {
    const double v = lithostatic_pressure(g.cell_y(j), p);
    for (int i = 0; i < g.nx; ++i) ps(i, j) = v;
  }
  return ps;
}

// q = q0 * (p_s - p_f)^+, nonnegative by construction.
inline CellScalar yield_field(const CellScalar& p_f, const CellScalar& p_s,
                              const PhysicalParams& params) {
  require_same_grid(p_f.grid, p_s.grid, "yield_field");
  CellScalar q(p_f.grid);
  for (int j = 0; j < q.grid.ny; ++j)
    for (int i = 0; i < q.grid.nx; ++i)
      q(i, j) = params.q0 * std::max(p_s(i, j) - p_f(i, j), 0.0);
  return q;
}

// sigma = q * D / (|D| + eps); |sigma| < q whenever q > 0.
inline SymTensor2 regularized_stress(double q, const SymTensor2& D, double eps) {
  if (!(eps > 0.0)) throw contract_error("regularized_stress: eps must be > 0");
  const double m = D.mag();
  return D * (q / (m + eps));
}

// sigma = q * D / |D| for D != 0, zero tensor on the rigid set.
inline SymTensor2 exact_stress(double q, const SymTensor2& D) {
  const double m = D.mag();
  if (m == 0.0) return {};
  return D * (q / m);
}

struct GraphResidual {
  double r_eq = 0.0;     // |sigma:D - q|D||
  double r_bound = 0.0;  // (|sigma| - q)^+
};

inline GraphResidual graph_residual(const GraphSample& s) {
  GraphResidual r;
  r.r_eq = std::abs(s.sigma.dot(s.D) - s.q * s.D.mag());
  r.r_bound = std::max(s.sigma.mag() - s.q, 0.0);
  return r;
}

// (sigma1 - sigma2):(D1 - D2); nonnegative for same-q members of the graph.
inline double monotonicity_gap(const GraphSample& s1, const GraphSample& s2) {
  if (s1.q != s2.q) throw contract_error("monotonicity_gap: samples have different q");
  return (s1.sigma - s2.sigma).dot(s1.D - s2.D);
}

// Membership verdicts of the two constitutive formulations must coincide:
//   pointwise form:    sigma = q D/|D| when D != 0, |sigma| <= q when D = 0
//   reformulated form: sigma:D = q|D| and |sigma| <= q
inline bool check_equivalence(const GraphSample& s, double tol) {
  const double dmag = s.D.mag();
  const double scale = 1.0 + s.q * (1.0 + dmag);

  bool member_pointwise;
  if (dmag > 0.0) {
    // multiplied through by |D| to stay division-free
    const SymTensor2 res = s.sigma * dmag - s.D * s.q;
    member_pointwise = res.mag() <= tol * scale * std::max(dmag, 1.0);
  } else {
    member_pointwise = s.sigma.mag() <= s.q + tol * scale;
  }

  const bool member_reformulated = std::abs(s.sigma.dot(s.D) - s.q * dmag) <= tol * scale &&
                                   s.sigma.mag() <= s.q + tol * scale;

  return member_pointwise == member_reformulated;
}

}  // namespace vpflow
