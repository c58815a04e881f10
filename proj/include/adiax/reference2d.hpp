#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"
#include "transverse.hpp"
#include "tridiag.hpp"

namespace adiax {

struct Rect2DGrid {
  std::vector<double> x, y;

  double dx() const { return grid_step(x); }
  double dy() const { return grid_step(y); }
  std::size_t nix() const { return x.size() - 2; }
  std::size_t niy() const { return y.size() - 2; }
  std::size_t interior() const { return nix() * niy(); }
  std::size_t idx(std::size_t i, std::size_t j) const { return i * niy() + j; }

  void validate() const {
    if (x.size() < 16 || y.size() < 16)
      throw validation_error("Rect2DGrid: need at least 16 nodes per axis");
    if (!(dx() > 0.0) || !(dy() > 0.0)) throw validation_error("Rect2DGrid: bad spacing");
  }
};

struct Wavefunction2D {
  Rect2DGrid grid;
  std::vector<cplx> psi;  // full grid, row-major (ix * ny + iy)

  double norm() const {
    const std::size_t nx = grid.x.size(), ny = grid.y.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
      for (std::size_t j = 0; j < ny; ++j) {
        const double wy = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
        acc += wx * wy * std::norm(psi[i * ny + j]);
      }
    }
    return std::sqrt(acc * grid.dx() * grid.dy());
  }
};

// H = -(mu^2/2) d^2/dx^2 - (1/2) d^2/dy^2 + v(x,y), Dirichlet, 5-point stencil
// on interior unknowns; symmetric by construction.
struct Operator2D {
  Rect2DGrid grid;
  double mu = 0.0;
  double cx = 0.0, cy = 0.0;   // neighbor couplings
  double dkin = 0.0;           // kinetic diagonal
  std::vector<double> vint;    // interior potential samples

  std::size_t dim() const { return grid.interior(); }
  double diag(std::size_t k) const { return dkin + vint[k]; }

  template <class T>
  void apply(const std::vector<T>& in, std::vector<T>& out, std::size_t threads = 1) const {
    const std::size_t nx = grid.nix(), ny = grid.niy();
    out.assign(in.size(), T(0));
    parallel_for(nx, threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t k = i * ny + j;
        T acc = (dkin + vint[k]) * in[k];
        if (i > 0) acc += T(cx) * in[k - ny];
        if (i + 1 < nx) acc += T(cx) * in[k + ny];
        if (j > 0) acc += T(cy) * in[k - 1];
        if (j + 1 < ny) acc += T(cy) * in[k + 1];
        out[k] = acc;
      }
    });
  }

  Wavefunction2D to_wavefunction(const std::vector<cplx>& interior) const {
    Wavefunction2D w;
    w.grid = grid;
    const std::size_t nx = grid.x.size(), ny = grid.y.size();
    w.psi.assign(nx * ny, 0.0);
    for (std::size_t i = 0; i < grid.nix(); ++i)
      for (std::size_t j = 0; j < grid.niy(); ++j)
        w.psi[(i + 1) * ny + (j + 1)] = interior[i * grid.niy() + j];
    return w;
  }
  std::vector<cplx> interior_of(const Wavefunction2D& w) const {
    const std::size_t ny = grid.y.size();
    std::vector<cplx> v(dim());
    for (std::size_t i = 0; i < grid.nix(); ++i)
      for (std::size_t j = 0; j < grid.niy(); ++j)
        v[i * grid.niy() + j] = w.psi[(i + 1) * ny + (j + 1)];
    return v;
  }
};

inline Operator2D assemble_2d(double mu, const std::function<double(double, double)>& v,
                              const Rect2DGrid& grid) {
  grid.validate();
  if (!(mu > 0.0)) throw validation_error("assemble_2d: mu must be positive");
  Operator2D op;
  op.grid = grid;
  op.mu = mu;
  const double dx = grid.dx(), dy = grid.dy();
  op.cx = -0.5 * mu * mu / (dx * dx);
  op.cy = -0.5 / (dy * dy);
  op.dkin = mu * mu / (dx * dx) + 1.0 / (dy * dy);
  op.vint.resize(grid.interior());
  for (std::size_t i = 0; i < grid.nix(); ++i)
    for (std::size_t j = 0; j < grid.niy(); ++j) {
      const double val = v ? v(grid.x[i + 1], grid.y[j + 1]) : 0.0;
      if (!std::isfinite(val)) throw validation_error("assemble_2d: non-finite potential");
      op.vint[grid.idx(i, j)] = val;
    }
  return op;
}

namespace detail {

// Jacobi-preconditioned CG for the SPD shifted operator (A - sigma I).
inline std::vector<double> cg_shifted(const Operator2D& op, double sigma,
                                      const std::vector<double>& b, double rtol,
                                      std::size_t threads, std::size_t max_it = 20000) {
  const std::size_t n = b.size();
  std::vector<double> xv(n, 0.0), r(b), z(n), p(n), q(n);
  auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = in[k] / (op.diag(k) - sigma);
  };
  precond(r, z);
  p = z;
  double rz = 0.0, bnorm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    rz += r[k] * z[k];
    bnorm += b[k] * b[k];
  }
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) return xv;
  for (std::size_t it = 0; it < max_it; ++it) {
    op.apply(p, q, threads);
    for (std::size_t k = 0; k < n; ++k) q[k] -= sigma * p[k];
    double pq = 0.0;
    for (std::size_t k = 0; k < n; ++k) pq += p[k] * q[k];
    if (!(pq > 0.0)) throw numerical_error("CgBreakdown", "indefinite shifted operator");
    const double alpha = rz / pq;
    double rnorm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      xv[k] += alpha * p[k];
      r[k] -= alpha * q[k];
      rnorm += r[k] * r[k];
    }
    if (std::sqrt(rnorm) <= rtol * bnorm) return xv;
    precond(r, z);
    double rz_new = 0.0;
    for (std::size_t k = 0; k < n; ++k) rz_new += r[k] * z[k];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  throw numerical_error("CgStall", "inner solve exceeded iteration cap");
}

}  // namespace detail

struct Eigs2D {
  std::vector<double> values;
  std::vector<Wavefunction2D> vectors;  // trapezoid-normalized, boundary zeros
  std::vector<double> residuals;
};

// Shift-invert Lanczos with full reorthogonalization; Ritz pairs accepted on
// the explicit residual ||A u - E u|| <= tol ||u||.
inline Eigs2D eigs_2d(const Operator2D& op, std::size_t k, double tol = 1e-8,
                      std::size_t m_max = 300, std::size_t threads = 1) {
  const std::size_t n = op.dim();
  if (k == 0 || k + 2 > n) throw validation_error("eigs_2d: bad eigenpair count");
  double vmin = op.vint[0];
  for (double v : op.vint) vmin = std::min(vmin, v);
  const double sigma = vmin - 1.0;

  std::vector<std::vector<double>> V;
  std::vector<double> alpha, beta;
  std::vector<double> v0(n);
  {
    std::uint64_t st = 0x2545F4914F6CDD1DULL;
    for (auto& e : v0) e = 2.0 * detail::lcg_unit(st) - 1.0;
    double nr = 0.0;
    for (double e : v0) nr += e * e;
    nr = std::sqrt(nr);
    for (auto& e : v0) e /= nr;
  }
  V.push_back(v0);

  auto solve_ritz = [&](std::size_t m, std::vector<double>& theta,
                        std::vector<std::vector<double>>& s) {
    std::vector<double> d(alpha.begin(), alpha.begin() + m);
    std::vector<double> e(beta.begin(), beta.begin() + (m > 1 ? m - 1 : 0));
    auto eig = tridiag_eigenpairs(d, e, 0, m - 1);
    theta = eig.values;
    s = eig.vectors;
  };

  Eigs2D out;
  for (std::size_t m = 1; m <= m_max; ++m) {
    std::vector<double> w = detail::cg_shifted(op, sigma, V.back(), 1e-12, threads);
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) a += w[i] * V.back()[i];
    alpha.push_back(a);
    for (std::size_t i = 0; i < n; ++i) w[i] -= a * V.back()[i];
    if (m > 1)
      for (std::size_t i = 0; i < n; ++i) w[i] -= beta.back() * V[m - 2][i];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& vb : V) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += w[i] * vb[i];
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * vb[i];
      }
    double bnew = 0.0;
    for (double e : w) bnew += e * e;
    bnew = std::sqrt(bnew);

    if (m >= std::max<std::size_t>(k + 2, 8) && (m % 4 == 0 || bnew < 1e-12 || m == m_max)) {
      std::vector<double> theta;
      std::vector<std::vector<double>> s;
      solve_ritz(m, theta, s);
      // largest theta of the inverse correspond to the lowest eigenvalues of A
      std::vector<std::size_t> ord(m);
      for (std::size_t i = 0; i < m; ++i) ord[i] = i;
      std::sort(ord.begin(), ord.end(),
                [&](std::size_t a1, std::size_t b1) { return theta[a1] > theta[b1]; });
      std::vector<double> vals;
      std::vector<std::vector<double>> vecs;
      std::vector<double> resid;
      bool all_ok = true;
      for (std::size_t j = 0; j < k; ++j) {
        if (!(theta[ord[j]] > 0.0)) {
          all_ok = false;
          break;
        }
        std::vector<double> u(n, 0.0);
        for (std::size_t q = 0; q < m; ++q) {
          const double c = s[ord[j]][q];
          const auto& vb = V[q];
          for (std::size_t i = 0; i < n; ++i) u[i] += c * vb[i];
        }
        double unorm = 0.0;
        for (double e : u) unorm += e * e;
        unorm = std::sqrt(unorm);
        for (auto& e : u) e /= unorm;
        const double E = sigma + 1.0 / theta[ord[j]];
        std::vector<double> Au(n);
        op.apply(u, Au, threads);
        double rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = Au[i] - E * u[i];
          rn += d * d;
        }
        rn = std::sqrt(rn);
        if (rn > tol) {
          all_ok = false;
          break;
        }
        vals.push_back(E);
        vecs.push_back(std::move(u));
        resid.push_back(rn);
      }
      if (all_ok) {
        std::vector<std::size_t> srt(k);
        for (std::size_t i = 0; i < k; ++i) srt[i] = i;
        std::sort(srt.begin(), srt.end(),
                  [&](std::size_t a1, std::size_t b1) { return vals[a1] < vals[b1]; });
        for (std::size_t i : srt) {
          out.values.push_back(vals[i]);
          out.residuals.push_back(resid[i]);
          std::vector<cplx> ci(vecs[i].begin(), vecs[i].end());
          auto wf = op.to_wavefunction(ci);
          const double nr = wf.norm();
          for (auto& c : wf.psi) c /= nr;
          out.vectors.push_back(std::move(wf));
        }
        return out;
      }
    }
    if (bnew < 1e-12) throw numerical_error("LanczosStall", "invariant subspace hit early");
    for (auto& e : w) e /= bnew;
    beta.push_back(bnew);
    V.push_back(std::move(w));
  }
  throw numerical_error("LanczosStall", "eigensolve exceeded iteration cap");
}

namespace detail {

// Solve (I + i gamma A) x = b with A real symmetric via the real splitting
// x = u + iv, b = f + ig: (I + gamma^2 A^2) v = g - gamma A f, u = f + gamma A v.
// The split system is SPD, so plain Jacobi-preconditioned CG converges without
// the quasi-breakdowns complex-symmetric iterations are prone to; the residual
// of the complex system equals the CG residual, so the tolerance transfers.
inline std::vector<cplx> cn_solve(const Operator2D& op, double gamma, const std::vector<cplx>& b,
                                  double rtol, std::size_t threads, std::size_t max_it = 20000) {
  const std::size_t n = b.size();
  double bnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) bnorm += std::norm(b[i]);
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) return std::vector<cplx>(n, 0.0);
  std::vector<double> f(n), rhs(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = b[i].real();
  op.apply(f, tmp, threads);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = b[i].imag() - gamma * tmp[i];
  const std::size_t nix = op.grid.nix(), niy = op.grid.niy();
  std::vector<double> mdiag(n);
  for (std::size_t i = 0; i < nix; ++i)
    for (std::size_t j = 0; j < niy; ++j) {
      const std::size_t k = i * niy + j;
      const double nxn = (i > 0) + (i + 1 < nix), nyn = (j > 0) + (j + 1 < niy);
      const double d = op.diag(k);
      mdiag[k] = 1.0 + gamma * gamma * (d * d + nxn * op.cx * op.cx + nyn * op.cy * op.cy);
    }
  auto applyS = [&](const std::vector<double>& in, std::vector<double>& out,
                    std::vector<double>& work) {
    op.apply(in, work, threads);
    op.apply(work, out, threads);
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] + gamma * gamma * out[i];
  };
  std::vector<double> v(n, 0.0), r(rhs), z(n), p(n), q(n), work(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / mdiag[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  bool done = false;
  for (std::size_t it = 0; it < max_it && !done; ++it) {
    applyS(p, q, work);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    const double alpha = rz / pq;
    double rnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rnorm += r[i] * r[i];
    }
    if (std::sqrt(rnorm) <= rtol * bnorm) {
      done = true;
      break;
    }
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / mdiag[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (!done) throw numerical_error("CnSolveStall", "Crank-Nicolson solve exceeded iteration cap");
  op.apply(v, tmp, threads);
  std::vector<cplx> xv(n);
  for (std::size_t i = 0; i < n; ++i) xv[i] = cplx(f[i] + gamma * tmp[i], v[i]);
  return xv;
}

}  // namespace detail

struct CnResult {
  std::vector<double> times;
  std::vector<Wavefunction2D> snapshots;
};

// Crank-Nicolson stepping of i mu psi_t = A psi; snapshots every snap_every
// steps (initial and final states always included).
inline CnResult evolve_cn(const Wavefunction2D& psi0, const Operator2D& op, double dt,
                          std::size_t steps, std::size_t snap_every = 0, double rtol = 1e-12,
                          std::size_t threads = 1) {
  if (!(dt > 0.0)) throw validation_error("evolve_cn: need dt > 0");
  if (psi0.psi.size() != op.grid.x.size() * op.grid.y.size())
    throw validation_error("evolve_cn: state/grid mismatch");
  const double gamma = dt / (2.0 * op.mu);
  std::vector<cplx> cur = op.interior_of(psi0);
  const std::size_t n = cur.size();
  CnResult out;
  auto snap = [&](double t) {
    out.times.push_back(t);
    out.snapshots.push_back(op.to_wavefunction(cur));
  };
  snap(0.0);
  std::vector<cplx> rhs(n), tmp(n);
  for (std::size_t s = 1; s <= steps; ++s) {
    op.apply(cur, tmp, threads);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = cur[i] - cplx(0.0, gamma) * tmp[i];
    cur = detail::cn_solve(op, gamma, rhs, rtol, threads);
    if ((snap_every && s % snap_every == 0) || s == steps) snap(double(s) * dt);
  }
  return out;
}

// psi_k(x_i) = <w_k(x_i, .), Psi(x_i, .)>_y under trapezoid quadrature.
inline std::vector<std::vector<cplx>> project_modes(const Wavefunction2D& Psi,
                                                    const std::vector<TermBranch>& branches) {
  const std::size_t nx = Psi.grid.x.size(), ny = Psi.grid.y.size();
  std::vector<std::vector<cplx>> coeff;
  for (const auto& br : branches) {
    if (br.y_grid.size() != ny || br.x_grid.size() != nx)
      throw validation_error("project_modes: branch grids do not match the 2D grid");
    if (std::abs(br.y_grid.front() - Psi.grid.y.front()) > 1e-12 ||
        std::abs(br.y_grid.back() - Psi.grid.y.back()) > 1e-12)
      throw validation_error("project_modes: y-grid endpoints differ");
    std::vector<cplx> ck(nx, 0.0);
    const double dy = Psi.grid.dy();
    for (std::size_t i = 0; i < nx; ++i) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < ny; ++j) {
        const double wq = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
        acc += wq * br.w[i][j] * Psi.psi[i * ny + j];
      }
      ck[i] = acc * dy;
    }
    coeff.push_back(std::move(ck));
  }
  return coeff;
}

// Psi(x, y) = f(x) w_k(x, y) for mode-pure initial data.
inline Wavefunction2D compose_mode(const Rect2DGrid& grid, const TermBranch& br,
                                   const std::vector<cplx>& f) {
  if (br.x_grid.size() != grid.x.size() || br.y_grid.size() != grid.y.size() ||
      f.size() != grid.x.size())
    throw validation_error("compose_mode: grid mismatch");
  Wavefunction2D w;
  w.grid = grid;
  const std::size_t ny = grid.y.size();
  w.psi.assign(grid.x.size() * ny, 0.0);
  for (std::size_t i = 0; i < grid.x.size(); ++i)
    for (std::size_t j = 0; j < ny; ++j) w.psi[i * ny + j] = f[i] * br.w[i][j];
  return w;
}

}  // namespace adiax
