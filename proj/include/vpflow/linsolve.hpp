#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vpflow/array2d.hpp"
#include "vpflow/errors.hpp"
#include "vpflow/grid.hpp"

namespace vpflow {

struct SolveInfo {
  int iters = 0;
  double rel_residual = 0.0;
  double inf_residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  double rtol = 1e-10;    // on ||r||_2 / ||b||_2
  double atol_inf = 0.0;  // absolute target on ||r||_inf; 0 disables
  int max_iters = 0;      // 0 -> 10 * n
};

// Plain conjugate gradients on a matrix-free SPD operator.
// Op must provide apply(const Field& x, Field& y).
template <class Op>
SolveInfo cg_solve(const Op& A, const Field& b, Field& x, const CgOptions& opt) {
  const std::size_t n = b.size();
  const int max_iters = opt.max_iters > 0 ? opt.max_iters : static_cast<int>(10 * n);

  Field r(b.nx(), b.ny()), p(b.nx(), b.ny()), Ap(b.nx(), b.ny());
  A.apply(x, Ap);
  double b2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) b2 += b.data()[k] * b.data()[k];
  const double bnorm = std::sqrt(b2);

  auto residual_norms = [&](const Field& rr, double& l2, double& linf) {
    double s = 0.0, m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = rr.data()[k];
      s += v * v;
      const double a = std::abs(v);
      if (a > m) m = a;
    }
    l2 = std::sqrt(s);
    linf = m;
  };

  for (std::size_t k = 0; k < n; ++k) r.data()[k] = b.data()[k] - Ap.data()[k];
  double rl2, rinf;
  residual_norms(r, rl2, rinf);

  // When an inf-norm target is set it is the binding criterion.
  auto met = [&](double l2, double linf) {
    if (opt.atol_inf > 0.0) return linf <= opt.atol_inf;
    return bnorm > 0.0 ? (l2 <= opt.rtol * bnorm) : (l2 == 0.0);
  };

  if (met(rl2, rinf)) return {0, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, true};

  p = r;
  double rs = rl2 * rl2;
  double best_inf = rinf;
  int since_best = 0;
  for (int it = 1; it <= max_iters; ++it) {
    A.apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      // Operator not positive definite along p (or exact zero): stop.
      return {it, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, met(rl2, rinf)};
    }
    const double alpha = rs / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    residual_norms(r, rl2, rinf);
    if (met(rl2, rinf)) {
      // Recompute the true residual before accepting.
      A.apply(x, Ap);
      for (std::size_t k = 0; k < n; ++k) r.data()[k] = b.data()[k] - Ap.data()[k];
      residual_norms(r, rl2, rinf);
      if (met(rl2, rinf)) return {it, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, true};
    }
    if (rinf < best_inf * 0.999) {
      best_inf = rinf;
      since_best = 0;
    } else if (++since_best > 60) {
      // Stagnated at the attainable floor.
      return {it, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, false};
    }
    const double rs_new = rl2 * rl2;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t k = 0; k < n; ++k) p.data()[k] = r.data()[k] + beta * p.data()[k];
  }
  return {max_iters, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, false};
}

// ---------------------------------------------------------------------------
// Cell-centered Poisson solver:  (-Laplacian) x = b  with per-side
// homogeneous Neumann or homogeneous Dirichlet (ghost = -interior) closure.
// Multigrid-preconditioned CG; V(1,1) cycles with symmetric red-black
// Gauss-Seidel smoothing, piecewise-constant prolongation, 4-cell averaging
// restriction, dense Cholesky on the coarsest level.
// ---------------------------------------------------------------------------

struct PoissonBc {
  // true = homogeneous Dirichlet on that side, false = homogeneous Neumann
  bool left = false, right = false, bottom = false, top = false;
  bool any_dirichlet() const { return left || right || bottom || top; }
};

namespace detail {

struct PoissonLevel {
  int nx = 0, ny = 0;
  double ix2 = 0.0, iy2 = 0.0;  // 1/hx^2, 1/hy^2
  PoissonBc bc;
  double reg = 0.0;  // diagonal regularization (singular coarsest only)

  inline double diagonal_at(int i, int j) const {
    double d = reg;
    d += (i > 0) ? ix2 : (bc.left ? 2.0 * ix2 : 0.0);
    d += (i < nx - 1) ? ix2 : (bc.right ? 2.0 * ix2 : 0.0);
    d += (j > 0) ? iy2 : (bc.bottom ? 2.0 * iy2 : 0.0);
    d += (j < ny - 1) ? iy2 : (bc.top ? 2.0 * iy2 : 0.0);
    return d;
  }

  void apply(const Field& x, Field& y) const {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double c = x(i, j);
        double acc = diagonal_at(i, j) * c;
        if (i > 0) acc -= ix2 * x(i - 1, j);
        if (i < nx - 1) acc -= ix2 * x(i + 1, j);
        if (j > 0) acc -= iy2 * x(i, j - 1);
        if (j < ny - 1) acc -= iy2 * x(i, j + 1);
        y(i, j) = acc;
      }
  }

  // One red-black Gauss-Seidel sweep; color = (i + j) & 1.
  void rb_sweep(Field& x, const Field& b, int color) const {
    for (int j = 0; j < ny; ++j) {
      int i0 = (color + j) & 1;
      for (int i = i0; i < nx; i += 2) {
        double acc = b(i, j);
        if (i > 0) acc += ix2 * x(i - 1, j);
        if (i < nx - 1) acc += ix2 * x(i + 1, j);
        if (j > 0) acc += iy2 * x(i, j - 1);
        if (j < ny - 1) acc += iy2 * x(i, j + 1);
        x(i, j) = acc / diagonal_at(i, j);
      }
    }
  }

  void residual(const Field& x, const Field& b, Field& r) const {
    apply(x, r);
    for (std::size_t k = 0; k < b.size(); ++k) r.data()[k] = b.data()[k] - r.data()[k];
  }
};

// Dense Cholesky for the coarsest level.
class DenseCholesky {
 public:
  void factor(const PoissonLevel& lvl) {
    n_ = lvl.nx * lvl.ny;
    a_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    auto idx = [&](int i, int j) { return j * lvl.nx + i; };
    for (int j = 0; j < lvl.ny; ++j)
      for (int i = 0; i < lvl.nx; ++i) {
        const int row = idx(i, j);
        at(row, row) = lvl.diagonal_at(i, j);
        if (i > 0) at(row, idx(i - 1, j)) = -lvl.ix2;
        if (i < lvl.nx - 1) at(row, idx(i + 1, j)) = -lvl.ix2;
        if (j > 0) at(row, idx(i, j - 1)) = -lvl.iy2;
        if (j < lvl.ny - 1) at(row, idx(i, j + 1)) = -lvl.iy2;
      }
    // in-place LL^T
    for (int k = 0; k < n_; ++k) {
      double d = at(k, k);
      for (int m = 0; m < k; ++m) d -= at(k, m) * at(k, m);
      if (!(d > 0.0)) throw solver_error("coarse Poisson factorization not positive definite");
      d = std::sqrt(d);
      at(k, k) = d;
      for (int r = k + 1; r < n_; ++r) {
        double s = at(r, k);
        for (int m = 0; m < k; ++m) s -= at(r, m) * at(k, m);
        at(r, k) = s / d;
      }
    }
  }

  void solve(const Field& b, Field& x) const {
    y_.assign(n_, 0.0);
    for (int r = 0; r < n_; ++r) {
      double s = b.data()[r];
      for (int m = 0; m < r; ++m) s -= at(r, m) * y_[m];
      y_[r] = s / at(r, r);
    }
    for (int r = n_ - 1; r >= 0; --r) {
      double s = y_[r];
      for (int m = r + 1; m < n_; ++m) s -= at(m, r) * x.data()[m];
      x.data()[r] = s / at(r, r);
    }
  }

 private:
  double& at(int r, int c) { return a_[static_cast<std::size_t>(c) * n_ + r]; }
  double at(int r, int c) const { return a_[static_cast<std::size_t>(c) * n_ + r]; }
  int n_ = 0;
  std::vector<double> a_;
  mutable std::vector<double> y_;
};

}  // namespace detail

class PoissonSolver {
 public:
  PoissonSolver() = default;
  PoissonSolver(const Grid& g, const PoissonBc& bc) { init(g, bc); }

  void init(const Grid& g, const PoissonBc& bc) {
    levels_.clear();
    singular_ = !bc.any_dirichlet();
    detail::PoissonLevel lvl;
    lvl.nx = g.nx;
    lvl.ny = g.ny;
    lvl.ix2 = 1.0 / (g.hx * g.hx);
    lvl.iy2 = 1.0 / (g.hy * g.hy);
    lvl.bc = bc;
    levels_.push_back(lvl);
    while (levels_.back().nx % 2 == 0 && levels_.back().ny % 2 == 0 &&
           levels_.back().nx * levels_.back().ny > 1024 && levels_.back().nx >= 8 &&
           levels_.back().ny >= 8) {
      detail::PoissonLevel c = levels_.back();
      c.nx /= 2;
      c.ny /= 2;
      c.ix2 /= 4.0;
      c.iy2 /= 4.0;
      levels_.push_back(c);
    }
    detail::PoissonLevel& coarse = levels_.back();
    if (coarse.nx * coarse.ny <= 4096) {
      if (singular_) coarse.reg = 1e-8 * (coarse.ix2 + coarse.iy2);
      chol_.factor(coarse);
      have_chol_ = true;
    } else {
      have_chol_ = false;
    }
    work_x_.resize(levels_.size());
    work_b_.resize(levels_.size());
    work_r_.resize(levels_.size());
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      work_x_[l] = Field(levels_[l].nx, levels_[l].ny);
      work_b_[l] = Field(levels_[l].nx, levels_[l].ny);
      work_r_[l] = Field(levels_[l].nx, levels_[l].ny);
    }
  }

  bool singular() const { return singular_; }

  // Solve (-Lap) x = b.  target_inf is an absolute bound on ||b - Ax||_inf.
  // For the all-Neumann (singular) case b is projected onto mean zero first.
  SolveInfo solve(const Field& b, Field& x, double target_inf, double rtol = 1e-12,
                  int max_iters = 400) const {
    const detail::PoissonLevel& top = levels_[0];
    const std::size_t n = b.size();
    Field bb = b;
    if (singular_) {
      remove_mean(bb);
      remove_mean(x);
    }

    Field r(top.nx, top.ny), z(top.nx, top.ny), p(top.nx, top.ny), Ap(top.nx, top.ny);
    top.residual(x, bb, r);
    double b2 = dot(bb, bb);
    const double bnorm = std::sqrt(b2);

    auto norms = [&](const Field& rr, double& l2, double& linf) {
      double s = 0.0, m = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = rr.data()[k];
        s += v * v;
        const double a = std::abs(v);
        if (a > m) m = a;
      }
      l2 = std::sqrt(s);
      linf = m;
    };

    double rl2, rinf;
    norms(r, rl2, rinf);
    if (rinf <= target_inf || (bnorm > 0 && rl2 <= rtol * bnorm) || rl2 == 0.0)
      return {0, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, true};

    precondition(r, z);
    if (singular_) remove_mean(z);
    p = z;
    double rz = dot(r, z);
    double best_inf = rinf;
    int since_best = 0;
    for (int it = 1; it <= max_iters; ++it) {
      top.apply(p, Ap);
      const double pAp = dot(p, Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      axpy(alpha, p, x);
      axpy(-alpha, Ap, r);
      norms(r, rl2, rinf);
      if (rinf <= target_inf || (bnorm > 0 && rl2 <= rtol * bnorm)) {
        top.residual(x, bb, r);  // true residual check
        norms(r, rl2, rinf);
        if (rinf <= target_inf || (bnorm > 0 && rl2 <= rtol * bnorm))
          return {it, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, true};
      }
      if (rinf < best_inf * 0.999) {
        best_inf = rinf;
        since_best = 0;
      } else if (++since_best > 40) {
        return {it, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, false};
      }
      precondition(r, z);
      if (singular_) remove_mean(z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) p.data()[k] = z.data()[k] + beta * p.data()[k];
    }
    return {max_iters, bnorm > 0 ? rl2 / bnorm : 0.0, rinf, false};
  }

 private:
  static void remove_mean(Field& f) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f.data()[k];
    const double m = s / f.size();
    for (std::size_t k = 0; k < f.size(); ++k) f.data()[k] -= m;
  }

  // One V(1,1) cycle applied to r, result in z (zero initial guess).
  void precondition(const Field& r, Field& z) const {
    work_b_[0] = r;
    vcycle(0);
    z = work_x_[0];
  }

  void vcycle(std::size_t l) const {
    const detail::PoissonLevel& lvl = levels_[l];
    Field& x = work_x_[l];
    Field& b = work_b_[l];
    x.fill(0.0);
    if (l + 1 == levels_.size()) {
      if (have_chol_) {
        chol_.solve(b, x);
      } else {
        for (int s = 0; s < 40; ++s) {
          lvl.rb_sweep(x, b, 0);
          lvl.rb_sweep(x, b, 1);
        }
      }
      return;
    }
    // pre-smooth (red, black)
    lvl.rb_sweep(x, b, 0);
    lvl.rb_sweep(x, b, 1);
    Field& r = work_r_[l];
    lvl.residual(x, b, r);
    // restrict: 4-cell average
    Field& bc_ = work_b_[l + 1];
    const detail::PoissonLevel& clvl = levels_[l + 1];
    for (int J = 0; J < clvl.ny; ++J)
      for (int I = 0; I < clvl.nx; ++I)
        bc_(I, J) = 0.25 * (r(2 * I, 2 * J) + r(2 * I + 1, 2 * J) + r(2 * I, 2 * J + 1) +
                            r(2 * I + 1, 2 * J + 1));
    vcycle(l + 1);
    // prolong: piecewise constant
    const Field& ec = work_x_[l + 1];
    for (int j = 0; j < lvl.ny; ++j)
      for (int i = 0; i < lvl.nx; ++i) x(i, j) += ec(i / 2, j / 2);
    // post-smooth (black, red): adjoint order keeps the cycle symmetric
    lvl.rb_sweep(x, b, 1);
    lvl.rb_sweep(x, b, 0);
  }

  std::vector<detail::PoissonLevel> levels_;
  detail::DenseCholesky chol_;
  bool have_chol_ = false;
  bool singular_ = false;
  mutable std::vector<Field> work_x_, work_b_, work_r_;
};

}  // namespace vpflow
