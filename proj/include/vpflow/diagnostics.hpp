#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vpflow/grid.hpp"
#include "vpflow/operators.hpp"
#include "vpflow/rheology.hpp"

namespace vpflow {

struct EnergySample {
  double t = 0.0;
  double kinetic = 0.0;       // (rho/2) sum |v|^2 dA
  double viscous_cum = 0.0;   // eta * int_0^t sum |grad v|^2 dA
  double plastic_cum = 0.0;   // int_0^t sum sigma:Dv dA
  double forcing_cum = 0.0;   // int_0^t <f, v>
  double divergence_max = 0.0;
  double pf_min = 0.0;
  double pf_max = 0.0;
  double rigid_fraction = 0.0;
};

inline double kinetic_energy(const StaggeredVelocity& vel, double rho) {
  double s = 0.0;
  for (int j = 0; j < vel.u.ny(); ++j)
    for (int i = 0; i < vel.u.nx(); ++i) s += vel.u(i, j) * vel.u(i, j);
  for (int j = 0; j < vel.v.ny(); ++j)
    for (int i = 0; i < vel.v.nx(); ++i) s += vel.v(i, j) * vel.v(i, j);
  return 0.5 * rho * s * vel.grid.cell_area();
}

struct EnergyAuditReport {
  bool ok = true;
  long first_bad_step = -1;
  double max_violation = 0.0;   // worst positive excess of the inequality
  double kinetic_linf = 0.0;    // max_t kinetic(t)
  double viscous_total = 0.0;   // final viscous_cum
  double plastic_total = 0.0;   // final plastic_cum (L1-style aggregate)
};

// Checks kinetic(t) + viscous_cum(t) + 2*plastic_cum(t)
//          <= kinetic(0) + forcing_cum(t) + slack per sample.
inline EnergyAuditReport energy_audit(const std::vector<EnergySample>& history,
                                      double slack_per_step = 1e-8) {
  EnergyAuditReport rep;
  if (history.empty()) return rep;
  const double e0 = history.front().kinetic;
  for (std::size_t n = 0; n < history.size(); ++n) {
    const EnergySample& s = history[n];
    rep.kinetic_linf = std::max(rep.kinetic_linf, s.kinetic);
    const double lhs = s.kinetic + s.viscous_cum + 2.0 * s.plastic_cum;
    const double rhs = e0 + s.forcing_cum + slack_per_step * e0 * static_cast<double>(n);
    const double excess = lhs - rhs;
    if (excess > 0.0) {
      if (rep.ok) rep.first_bad_step = static_cast<long>(n);
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, excess);
    }
  }
  rep.viscous_total = history.back().viscous_cum;
  rep.plastic_total = history.back().plastic_cum;
  return rep;
}

struct RigidZoneReport {
  Array2D<unsigned char> mask;       // 1 where |Dv| <= tol_rigid at the cell center
  double area_fraction = 0.0;
  std::vector<double> plug_width;    // per x-station ( = per cell column), in length units
};

// Mask of cells where the deformation-rate magnitude does not exceed
// tol_rigid; the plug width at a column is the contiguous masked span
// containing the channel midline (0 if the midline is unmasked).
inline RigidZoneReport rigid_zone(const SymTensorField& D, double tol_rigid) {
  if (!(tol_rigid > 0.0)) throw config_error("rigid_zone: tol_rigid must be > 0");
  const Grid& g = D.grid;
  RigidZoneReport rep;
  rep.mask = Array2D<unsigned char>(g.nx, g.ny, 0);
  long count = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const bool rigid = tensor_mag_at_center(D, i, j) <= tol_rigid;
      rep.mask(i, j) = rigid ? 1 : 0;
      count += rigid;
    }
  rep.area_fraction = static_cast<double>(count) / (static_cast<double>(g.nx) * g.ny);

  rep.plug_width.resize(g.nx, 0.0);
  const int jm_lo = g.ny / 2 - 1, jm_hi = g.ny / 2;  // cells straddling the midline
  for (int i = 0; i < g.nx; ++i) {
    int lo = -1, hi = -1;
    if (rep.mask(i, jm_hi)) {
      lo = hi = jm_hi;
    }
    if (rep.mask(i, jm_lo)) {
      lo = jm_lo;
      if (hi < 0) hi = jm_lo;
    }
    if (lo < 0) continue;
    while (lo - 1 >= 0 && rep.mask(i, lo - 1)) --lo;
    while (hi + 1 < g.ny && rep.mask(i, hi + 1)) ++hi;
    rep.plug_width[i] = (hi - lo + 1) * g.hy;
  }
  return rep;
}

struct GraphSweepRow {
  double eps = 0.0;
  double mean_r_eq = 0.0;
  double max_r_eq = 0.0;
  double max_r_bound = 0.0;
  double max_q_eps = 0.0;  // the sitewise bound max(q)*eps
};

// Residuals of the regularized stress map over all tensor sites of a frozen
// (q, Dv) snapshot, one row per eps.
inline std::vector<GraphSweepRow> graph_limit_sweep(const CellScalar& q, const SymTensorField& D,
                                                    const std::vector<double>& eps_list) {
  require_same_grid(q.grid, D.grid, "graph_limit_sweep");
  const Grid& g = q.grid;
  std::vector<GraphSweepRow> table;
  double qmax = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) qmax = std::max(qmax, q(i, j));

  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw config_error("graph_limit_sweep: eps values must be > 0");
    GraphSweepRow row;
    row.eps = eps;
    row.max_q_eps = qmax * eps;
    double sum = 0.0;
    long n = 0;
    auto visit = [&](double qs, const SymTensor2& Ds) {
      GraphSample s{regularized_stress(qs, Ds, eps), Ds, qs};
      const GraphResidual r = graph_residual(s);
      sum += r.r_eq;
      row.max_r_eq = std::max(row.max_r_eq, r.r_eq);
      row.max_r_bound = std::max(row.max_r_bound, r.r_bound);
      ++n;
    };
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        visit(q(i, j), {D.d11(i, j), D.d22(i, j), corners_to_center(D.d12, i, j)});
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i)
        visit(centers_to_corner(q.values, i, j),
              {centers_to_corner(D.d11, i, j), centers_to_corner(D.d22, i, j), D.d12(i, j)});
    row.mean_r_eq = sum / n;
    table.push_back(row);
  }
  return table;
}

struct VelocityProfile {
  double station_x = 0.0;
  std::vector<double> y;  // u-face row centers
  std::vector<double> u;  // horizontal velocity, linearly interpolated in x
};

inline std::vector<VelocityProfile> profile_extract(const StaggeredVelocity& vel,
                                                    const std::vector<double>& stations) {
  const Grid& g = vel.grid;
  std::vector<VelocityProfile> out;
  for (double xs : stations) {
    if (xs < 0.0 || xs > g.Lx) throw config_error("profile_extract: station outside the domain");
    VelocityProfile prof;
    prof.station_x = xs;
    const double s = xs / g.hx;
    int i0 = static_cast<int>(std::floor(s));
    i0 = std::clamp(i0, 0, g.nx - 1);
    const double w = s - i0;
    prof.y.resize(g.ny);
    prof.u.resize(g.ny);
    for (int j = 0; j < g.ny; ++j) {
      prof.y[j] = g.uface_y(j);
      prof.u[j] = (1.0 - w) * vel.u(i0, j) + w * vel.u(i0 + 1, j);
    }
    out.push_back(std::move(prof));
  }
  return out;
}

}  // namespace vpflow
