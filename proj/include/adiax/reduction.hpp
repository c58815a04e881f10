#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"
#include "symbols.hpp"
#include "transverse.hpp"
#include "tridiag.hpp"

namespace adiax {

using Field = std::vector<cplx>;
using FieldOp = std::function<Field(double p, double x, const Field&)>;
using FieldSupplier = std::function<Field(double p, double x)>;

// Operator family of one confinement branch: fast-scale operators and the
// chi0 suppliers the reduction formulas consume.
struct OperatorFamily {
  std::vector<double> y_grid;
  bool periodic_y = false;
  FieldOp apply_H0;
  FieldOp apply_dH0_dp;
  FieldOp apply_H1;                   // null means zero
  FieldSupplier time_derivative_chi0; // null means zero
  FieldSupplier chi0;
  FieldSupplier dchi0_dx;
  FieldSupplier dchi0_dp;             // null means zero (p-independent chi0)
  // Interior tridiagonal of (H0 - Heff)(p, x) for matrix-backed solves; null
  // for families that only support operator application.
  std::function<void(double p, double x, std::vector<double>& d, std::vector<double>& e)>
      shifted_interior;

  double quad_dy() const { return grid_step(y_grid); }

  cplx inner(const Field& a, const Field& b) const {
    const double dy = quad_dy();
    if (!periodic_y) return inner_y(a, b, dy);
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s * dy;
  }
  double field_norm(const Field& a) const { return std::sqrt(std::abs(inner(a, a))); }
};

enum class Regime { ShortWave, MediumWave, LongWave, UltraShortWave };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::ShortWave:
      return "ShortWave";
    case Regime::MediumWave:
      return "MediumWave";
    case Regime::LongWave:
      return "LongWave";
    case Regime::UltraShortWave:
      return "UltraShortWave";
  }
  return "?";
}

// Nearest canonical scale exponent in log space; ties prefer ShortWave.
inline Regime classify_regime(double mu, double h) {
  if (!(mu > 0.0 && mu < 1.0)) throw validation_error("classify_regime: need 0 < mu < 1");
  const double lo = std::pow(mu, 1.5);
  if (!(h > lo) || !(h <= 1.0))
    throw validation_error("classify_regime: h outside the validity window (mu^{3/2}, 1]");
  const double alpha = std::log(h) / std::log(mu);
  const Regime order[4] = {Regime::ShortWave, Regime::MediumWave, Regime::LongWave,
                           Regime::UltraShortWave};
  const double expo[4] = {1.0, 0.5, 0.0, 1.25};
  Regime best = order[0];
  double bd = std::abs(alpha - expo[0]);
  for (int i = 1; i < 4; ++i) {
    const double d = std::abs(alpha - expo[i]);
    if (d < bd - 1e-12) {
      bd = d;
      best = order[i];
    }
  }
  return best;
}

// Quadratic-in-p least-squares fit of L1 samples, linear interpolation in x.
struct L1Fit {
  std::vector<double> x_grid;
  std::vector<double> p_samples;
  std::vector<std::vector<cplx>> samples;  // [ip][ix]
  std::vector<cplx> ell0, ell1, ell2;      // per x-node
  double fit_residual = 0.0;

  bool empty() const { return x_grid.empty(); }

  static double interp(const std::vector<double>& g, const std::vector<double>& f, double x) {
    if (x <= g.front()) return f.front();
    if (x >= g.back()) return f.back();
    const double dx = grid_step(g);
    const std::size_t i = std::min(g.size() - 2, std::size_t((x - g.front()) / dx));
    const double t = (x - g[i]) / dx;
    return (1 - t) * f[i] + t * f[i + 1];
  }
  cplx coeff(const std::vector<cplx>& c, double x) const {
    std::vector<double> re(c.size()), im(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      re[i] = c[i].real();
      im[i] = c[i].imag();
    }
    return {interp(x_grid, re, x), interp(x_grid, im, x)};
  }
  cplx eval(double p, double x) const {
    if (empty()) return 0.0;
    return coeff(ell0, x) + coeff(ell1, x) * p + coeff(ell2, x) * (p * p);
  }
  cplx dp(double p, double x) const {
    if (empty()) return 0.0;
    return coeff(ell1, x) + 2.0 * coeff(ell2, x) * p;
  }
};

struct EffectiveModel {
  int nu = 1;
  double mu = 0.0, h = 0.0;
  Regime regime = Regime::ShortWave;
  std::vector<double> x_grid;
  std::vector<double> v_ext;  // samples on x_grid
  std::vector<double> eps;    // branch transverse level on x_grid
  std::vector<double> G;      // geometric potential samples (empty means zero)
  L1Fit L1;
  std::function<double(double, double)> Heff_override, dHeff_dp_override;

  double potential(double x) const {
    std::vector<double> tot(v_ext.size());
    for (std::size_t i = 0; i < tot.size(); ++i) tot[i] = v_ext[i] + eps[i];
    return L1Fit::interp(x_grid, tot, x);
  }
  double Heff(double p, double x) const {
    if (Heff_override) return Heff_override(p, x);
    return 0.5 * p * p + potential(x);
  }
  double dHeff_dp(double p, double x) const {
    if (dHeff_dp_override) return dHeff_dp_override(p, x);
    return p;
  }
  double dHeff_dx(double p, double x) const {
    (void)p;
    std::vector<double> tot(v_ext.size());
    for (std::size_t i = 0; i < tot.size(); ++i) tot[i] = v_ext[i] + eps[i];
    auto dv = d_dx(tot, grid_step(x_grid));
    return L1Fit::interp(x_grid, dv, x);
  }
};

// H_eff = p^2/2 + v_ext + eps^nu with linear interpolation between x-nodes.
inline EffectiveModel effective_hamiltonian(const TermBranch& branch,
                                            const std::function<double(double)>& v_ext) {
  EffectiveModel m;
  m.nu = branch.nu;
  m.x_grid = branch.x_grid;
  m.eps = branch.eps;
  m.v_ext.resize(branch.x_grid.size());
  for (std::size_t i = 0; i < m.v_ext.size(); ++i)
    m.v_ext[i] = v_ext ? v_ext(branch.x_grid[i]) : 0.0;
  return m;
}

inline std::vector<double> geometric_potential(const std::vector<double>& curvature) {
  std::vector<double> G(curvature.size());
  for (std::size_t i = 0; i < G.size(); ++i) G[i] = -curvature[i] * curvature[i] / 8.0;
  return G;
}

// Waveguide operator family on a Dirichlet y-grid:
// H0 = p^2/2 - 1/2 d^2/dy^2 + v_int(x,y) + v_ext(x), H1 = 0, chi0 = branch w.
// The x-derivative of chi0 is the centered difference with its (spurious)
// component along chi0 projected out, so <chi0, d chi0/dx> = 0 holds exactly.
inline OperatorFamily make_waveguide_family(const ConfinementModel& model,
                                            const std::function<double(double)>& v_ext,
                                            const TermBranch& branch) {
  OperatorFamily fam;
  fam.y_grid = branch.y_grid;
  fam.periodic_y = false;
  const double dy = grid_step(branch.y_grid);
  const auto deriv = branch_x_derivatives(branch);
  const auto xg = branch.x_grid;
  const double dx = grid_step(xg);

  auto vx = [v_ext](double x) { return v_ext ? v_ext(x) : 0.0; };

  auto locate = [xg, dx](double x) -> std::pair<std::size_t, double> {
    double s = (x - xg.front()) / dx;
    s = std::clamp(s, 0.0, double(xg.size() - 1));
    const std::size_t i = std::min(xg.size() - 2, std::size_t(s));
    return {i, s - double(i)};
  };

  const auto ygrid = branch.y_grid;
  fam.apply_H0 = [model, vx, dy, ygrid](double p, double x, const Field& f) {
    const std::size_t n = f.size();
    Field g(n, 0.0);
    const double shift = 0.5 * p * p + vx(x);
    for (std::size_t i = 1; i + 1 < n; ++i)
      g[i] = -0.5 * (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dy * dy) +
             (model.value(x, ygrid[i]) + shift) * f[i];
    return g;
  };
  fam.apply_dH0_dp = [](double p, double, const Field& f) {
    Field g(f);
    for (auto& v : g) v *= p;
    return g;
  };
  fam.apply_H1 = nullptr;
  fam.time_derivative_chi0 = nullptr;
  fam.dchi0_dp = nullptr;

  auto w_at = [branch, locate, dy](double x) {
    auto [i, t] = locate(x);
    Field f(branch.y_grid.size());
    if (t < 1e-12) {
      for (std::size_t j = 0; j < f.size(); ++j) f[j] = branch.w[i][j];
      return f;
    }
    for (std::size_t j = 0; j < f.size(); ++j)
      f[j] = (1 - t) * branch.w[i][j] + t * branch.w[i + 1][j];
    const double nr = norm_y(f, dy);
    for (auto& v : f) v /= nr;
    return f;
  };
  fam.chi0 = [w_at](double, double x) { return w_at(x); };
  fam.dchi0_dx = [branch, deriv, locate, dy, w_at](double, double x) {
    auto [i, t] = locate(x);
    Field g(branch.y_grid.size());
    std::vector<double> raw(branch.y_grid.size());
    for (std::size_t j = 0; j < raw.size(); ++j)
      raw[j] = (t < 1e-12) ? deriv.dw_dx[i][j] : ((1 - t) * deriv.dw_dx[i][j] + t * deriv.dw_dx[i + 1][j]);
    Field w = w_at(x);
    cplx ov = 0.0;
    {
      std::vector<cplx> rawc(raw.begin(), raw.end());
      ov = inner_y(w, rawc, dy);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] = rawc[j] - ov * w[j];
    }
    return g;
  };
  fam.shifted_interior = [model, vx, branch, dy, locate](double p, double x, std::vector<double>& d,
                                                         std::vector<double>& e) {
    auto [i, t] = locate(x);
    const double eps = (1 - t) * branch.eps[i] + t * branch.eps[i + 1];
    const std::size_t ni = branch.y_grid.size() - 2;
    d.resize(ni);
    e.assign(ni - 1, -0.5 / (dy * dy));
    (void)p;
    for (std::size_t j = 0; j < ni; ++j)
      d[j] = 1.0 / (dy * dy) + model.value(x, branch.y_grid[j + 1]) - eps;
  };
  return fam;
}

// L1(p,x) = <chi0, H1 chi0> - i <chi0, d chi0/dt> - i <chi0, [dH0/dp - dHeff/dp] d chi0/dx>,
// sampled on {-1,-1/2,0,1/2,1} p_scale and fitted by a degree-2 polynomial per x-node.
inline L1Fit correction_L1(const OperatorFamily& fam, const EffectiveModel& eff,
                           double p_scale = 1.0) {
  L1Fit fit;
  fit.x_grid = eff.x_grid;
  fit.p_samples = {-p_scale, -0.5 * p_scale, 0.0, 0.5 * p_scale, p_scale};
  fit.samples.assign(fit.p_samples.size(), std::vector<cplx>(fit.x_grid.size(), 0.0));
  for (std::size_t ip = 0; ip < fit.p_samples.size(); ++ip) {
    const double p = fit.p_samples[ip];
    for (std::size_t ix = 0; ix < fit.x_grid.size(); ++ix) {
      const double x = fit.x_grid[ix];
      const Field chi0 = fam.chi0(p, x);
      const Field chix = fam.dchi0_dx(p, x);
      cplx val = 0.0;
      if (fam.apply_H1) val += fam.inner(chi0, fam.apply_H1(p, x, chi0));
      if (fam.time_derivative_chi0)
        val -= cplx(0.0, 1.0) * fam.inner(chi0, fam.time_derivative_chi0(p, x));
      Field g = fam.apply_dH0_dp(p, x, chix);
      const double hp = eff.dHeff_dp(p, x);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] -= hp * chix[j];
      val -= cplx(0.0, 1.0) * fam.inner(chi0, g);
      fit.samples[ip][ix] = val;
    }
  }
  fit.ell0.resize(fit.x_grid.size());
  fit.ell1.resize(fit.x_grid.size());
  fit.ell2.resize(fit.x_grid.size());
  for (std::size_t ix = 0; ix < fit.x_grid.size(); ++ix) {
    std::vector<double> re(fit.p_samples.size()), im(fit.p_samples.size());
    for (std::size_t ip = 0; ip < fit.p_samples.size(); ++ip) {
      re[ip] = fit.samples[ip][ix].real();
      im[ip] = fit.samples[ip][ix].imag();
    }
    auto cr = polyfit(fit.p_samples, re, 2);
    auto ci = polyfit(fit.p_samples, im, 2);
    fit.ell0[ix] = {cr[0], ci[0]};
    fit.ell1[ix] = {cr[1], ci[1]};
    fit.ell2[ix] = {cr[2], ci[2]};
    for (std::size_t ip = 0; ip < fit.p_samples.size(); ++ip) {
      const double p = fit.p_samples[ip];
      const cplx pred = fit.ell0[ix] + fit.ell1[ix] * p + fit.ell2[ix] * (p * p);
      fit.fit_residual = std::max(fit.fit_residual, std::abs(pred - fit.samples[ip][ix]));
    }
  }
  return fit;
}

// F1 = i chi0_t + i (dH0/dp) dchi0/dx - i (dHeff/dx) dchi0/dp.
inline Field assemble_F1(const OperatorFamily& fam, const EffectiveModel& eff, double p, double x) {
  const Field chix = fam.dchi0_dx(p, x);
  Field F = fam.apply_dH0_dp(p, x, chix);
  for (auto& v : F) v *= cplx(0.0, 1.0);
  if (fam.time_derivative_chi0) {
    Field ct = fam.time_derivative_chi0(p, x);
    for (std::size_t j = 0; j < F.size(); ++j) F[j] += cplx(0.0, 1.0) * ct[j];
  }
  if (fam.dchi0_dp) {
    const double hx = eff.dHeff_dx(p, x);
    Field cp = fam.dchi0_dp(p, x);
    for (std::size_t j = 0; j < F.size(); ++j) F[j] -= cplx(0.0, 1.0) * hx * cp[j];
  }
  return F;
}

struct Chi1Result {
  Field chi1;
  double solvability = 0.0;  // |<chi0, F1 - H1 chi0 + chi0 L1>|
  double residual = 0.0;     // ||(H0 - Heff) chi1 - rhs_perp||
};

// Deflated solve of (H0 - Heff) chi1 = F1 - H1 chi0 + chi0 L1 with <chi0, chi1> = 0,
// via the full spectral decomposition of the interior tridiagonal.
inline Chi1Result correction_chi1(const OperatorFamily& fam, const EffectiveModel& eff,
                                  const L1Fit& L1, double p, double x, double solv_tol = 1e-6) {
  if (!fam.shifted_interior)
    throw validation_error("correction_chi1 needs a matrix-backed operator family");
  const Field chi0 = fam.chi0(p, x);
  Field rhs = assemble_F1(fam, eff, p, x);
  if (fam.apply_H1) {
    Field h1 = fam.apply_H1(p, x, chi0);
    for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] -= h1[j];
  }
  const cplx l1 = L1.eval(p, x);
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] += l1 * chi0[j];

  Chi1Result out;
  out.solvability = std::abs(fam.inner(chi0, rhs));
  if (out.solvability > solv_tol)
    throw numerical_error("FredholmViolation", "solvability inner product " +
                                                   std::to_string(out.solvability) +
                                                   " exceeds tolerance");
  const cplx ov = fam.inner(chi0, rhs);
  Field rhs_perp(rhs);
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs_perp[j] -= ov * chi0[j];

  std::vector<double> d, e;
  fam.shifted_interior(p, x, d, e);
  const std::size_t ni = d.size();
  auto eig = tridiag_eigenpairs(d, e, 0, ni - 1);
  // branch level: eigenvalue closest to zero after the shift
  std::size_t k0 = 0;
  for (std::size_t k = 1; k < ni; ++k)
    if (std::abs(eig.values[k]) < std::abs(eig.values[k0])) k0 = k;

  std::vector<cplx> r_int(ni);
  for (std::size_t j = 0; j < ni; ++j) r_int[j] = rhs_perp[j + 1];
  Field chi1(chi0.size(), 0.0);
  for (std::size_t k = 0; k < ni; ++k) {
    if (k == k0) continue;
    cplx c = 0.0;
    for (std::size_t j = 0; j < ni; ++j) c += eig.vectors[k][j] * r_int[j];
    c /= eig.values[k];
    for (std::size_t j = 0; j < ni; ++j) chi1[j + 1] += c * eig.vectors[k][j];
  }
  const cplx c0 = fam.inner(chi0, chi1);
  for (std::size_t j = 0; j < chi1.size(); ++j) chi1[j] -= c0 * chi0[j];

  Field lhs = fam.apply_H0(p, x, chi1);
  const double heff = eff.Heff(p, x);
  double res = 0.0;
  for (std::size_t j = 0; j < lhs.size(); ++j) res = std::max(res, std::abs(lhs[j] - heff * chi1[j] - rhs_perp[j]));
  out.residual = res;
  out.chi1 = std::move(chi1);
  return out;
}

struct EssentialHamiltonian {
  double mu = 0.0, h = 0.0;
  Regime regime = Regime::ShortWave;
  std::vector<double> x_grid;
  std::vector<double> v_eff_total;     // potential samples, rescaled units
  std::vector<double> c1;              // coefficient of p_hat = -i h d/dx
  std::vector<double> kinetic_factor;  // multiplies the 1/2 (p_hat)^2 term
  double zero_order = 0.0;             // constant removed from the potential
  double kinetic = 0.5;

  double to_original_energy(double e_essential) const {
    return zero_order + (mu * mu) / (h * h) * e_essential;
  }
};

// Rescaled essential operator: 1/2 kf (p^h)^2 + v_eff1 + lambda^nu + regime terms.
inline EssentialHamiltonian assemble_essential(const EffectiveModel& eff) {
  if (eff.x_grid.size() < 3) throw validation_error("assemble_essential: x-grid too small");
  if (!(eff.mu > 0.0) || !(eff.h > 0.0))
    throw validation_error("assemble_essential: mu and h must be set");
  EssentialHamiltonian ess;
  ess.mu = eff.mu;
  ess.h = eff.h;
  ess.regime = classify_regime(eff.mu, eff.h);
  ess.x_grid = eff.x_grid;
  const std::size_t nx = eff.x_grid.size();
  ess.v_eff_total.resize(nx);
  ess.c1.assign(nx, 0.0);
  ess.kinetic_factor.assign(nx, 1.0);
  const double r = (ess.h * ess.h) / (ess.mu * ess.mu);
  const double v0 = eff.v_ext.at(0) + eff.eps.at(0);
  ess.zero_order = v0;
  for (std::size_t i = 0; i < nx; ++i)
    ess.v_eff_total[i] = r * (eff.v_ext[i] + eff.eps[i] - v0);

  double l1_scale = 1.0;
  if (!eff.L1.empty()) {
    for (const auto& row : eff.L1.samples)
      for (const auto& v : row) l1_scale = std::max(l1_scale, std::abs(v));
    double imax = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
      imax = std::max({imax, std::abs(eff.L1.ell0[i].imag()), std::abs(eff.L1.ell1[i].imag()),
                       std::abs(eff.L1.ell2[i].imag())});
    if (imax > 1e-9 * l1_scale)
      throw validation_error("assemble_essential: non-Hermitian L1 coefficients");
    if (ess.regime == Regime::UltraShortWave && eff.L1.fit_residual > 1e-8 * l1_scale)
      throw validation_error("assemble_essential: L1 is not a degree-2 polynomial in p");
    if (ess.regime == Regime::LongWave) {
      double m0 = 0.0;
      for (std::size_t i = 0; i < nx; ++i) m0 = std::max(m0, std::abs(eff.L1.ell0[i]));
      if (m0 > 1e-8 * l1_scale)
        throw validation_error("assemble_essential: LongWave regime requires L1(x,0) = 0");
    }
    const double pref = (ess.h * ess.h) / ess.mu;
    for (std::size_t i = 0; i < nx; ++i) {
      ess.v_eff_total[i] += pref * eff.L1.ell0[i].real();
      ess.c1[i] = ess.h * eff.L1.ell1[i].real();
      ess.kinetic_factor[i] = 1.0 + 2.0 * ess.mu * eff.L1.ell2[i].real();
    }
  }
  if (ess.regime == Regime::LongWave && !eff.G.empty()) {
    if (eff.G.size() != nx) throw validation_error("assemble_essential: G sample count mismatch");
    for (std::size_t i = 0; i < nx; ++i) ess.v_eff_total[i] += eff.G[i];
  }
  return ess;
}

struct ReducedStates {
  std::vector<double> values;           // essential-scale eigenvalues
  std::vector<double> values_original;  // zero_order + (mu^2/h^2) values
  std::vector<std::vector<cplx>> vectors;  // full x-grid, trapezoid-normalized
};

// Dirichlet eigenpairs of -(h^2/2) d/dx kf d/dx + c1 p_hat (symmetrized) + v_eff_total.
inline ReducedStates solve_reduced_stationary(const EssentialHamiltonian& ess, std::size_t count) {
  const std::size_t nx = ess.x_grid.size();
  const std::size_t ni = nx - 2;
  if (count > ni) throw validation_error("solve_reduced_stationary: count exceeds interior nodes");
  const double dx = grid_step(ess.x_grid);
  const double h = ess.h;
  std::vector<double> diag(ni);
  std::vector<cplx> off(ni - 1);
  auto kf = [&](std::size_t i) { return ess.kinetic_factor[i]; };
  for (std::size_t j = 0; j < ni; ++j) {
    const std::size_t i = j + 1;  // full-grid index
    const double km = 0.5 * (kf(i - 1) + kf(i));
    const double kp = 0.5 * (kf(i) + kf(i + 1));
    diag[j] = 0.5 * h * h * (km + kp) / (dx * dx) + ess.v_eff_total[i];
    if (j + 1 < ni) {
      const double kface = 0.5 * (kf(i) + kf(i + 1));
      const double conv = (ess.c1[i] + ess.c1[i + 1]) / 2.0;
      off[j] = cplx(-0.5 * h * h * kface / (dx * dx), -h * conv / (2.0 * dx));
    }
  }
  ReducedStates out;
  auto eig = herm_tridiag_eigenpairs(diag, off, 0, count - 1);
  out.values = eig.values;
  out.values_original.resize(count);
  out.vectors.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.values_original[k] = ess.to_original_energy(eig.values[k]);
    out.vectors[k].assign(nx, 0.0);
    for (std::size_t j = 0; j < ni; ++j) out.vectors[k][j + 1] = eig.vectors[k][j];
    const double nr = norm_y(out.vectors[k], dx);
    for (auto& v : out.vectors[k]) v /= nr;
  }
  return out;
}

// Symbol bundle of one waveguide branch for residual-order studies.
struct ReductionSymbols {
  MuSymbol H;     // order 0: p^2/2 + (-1/2 d^2/dy^2 + v_int + v_ext)
  MuSymbol chi;   // chi0 (+ mu chi1 when requested)
  MuSymbol L;     // L0 = p^2/2 + v_ext + eps (+ mu L1, zero here)
};

inline ReductionSymbols build_reduction_symbols(const ConfinementModel& model,
                                                const std::function<double(double)>& v_ext,
                                                const TermBranch& branch, bool with_corrections) {
  const auto& xg = branch.x_grid;
  const auto& yg = branch.y_grid;
  const std::size_t nx = xg.size(), ny = yg.size();
  const double dy = grid_step(yg);
  auto vx = [&](double x) { return v_ext ? v_ext(x) : 0.0; };

  ReductionSymbols R;
  R.H.x_grid = xg;
  R.H.orders.resize(1);
  R.H.orders[0].powers.resize(3);
  R.H.orders[0].powers[0].resize(nx);
  R.H.orders[0].powers[1].assign(nx, Entry::scalar(0.0));
  R.H.orders[0].powers[2].assign(nx, Entry::scalar(0.5));
  for (std::size_t i = 0; i < nx; ++i) {
    std::vector<cplx> d(ny, 0.0), lo(ny - 1, 0.0), up(ny - 1, 0.0);
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      d[j] = 1.0 / (dy * dy) + model.value(xg[i], yg[j]) + vx(xg[i]);
      if (j > 1) lo[j - 1] = -0.5 / (dy * dy);
      if (j + 2 < ny) up[j] = -0.5 / (dy * dy);
    }
    R.H.orders[0].powers[0][i] = Entry::make_op(std::move(d), std::move(lo), std::move(up));
  }

  R.chi.x_grid = xg;
  R.chi.orders.resize(with_corrections ? 2 : 1);
  R.chi.orders[0].powers.resize(1);
  R.chi.orders[0].powers[0].resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    std::vector<cplx> f(branch.w[i].begin(), branch.w[i].end());
    R.chi.orders[0].powers[0][i] = Entry::make_field(std::move(f));
  }

  R.L.x_grid = xg;
  R.L.orders.resize(1);
  R.L.orders[0].powers.resize(3);
  R.L.orders[0].powers[0].resize(nx);
  R.L.orders[0].powers[1].assign(nx, Entry::scalar(0.0));
  R.L.orders[0].powers[2].assign(nx, Entry::scalar(0.5));
  for (std::size_t i = 0; i < nx; ++i)
    R.L.orders[0].powers[0][i] = Entry::scalar(vx(xg[i]) + branch.eps[i]);

  if (with_corrections) {
    // chi1 = i p q(x), q = (H0 - Heff)^+ (projected d chi0/dx); L1 = 0 here.
    const auto deriv = branch_x_derivatives(branch);
    R.chi.orders[1].powers.resize(2);
    R.chi.orders[1].powers[0].assign(nx, Entry::scalar(0.0));
    R.chi.orders[1].powers[1].resize(nx);
    const std::size_t ni = ny - 2;
    for (std::size_t i = 0; i < nx; ++i) {
      std::vector<double> d(ni), e(ni - 1, -0.5 / (dy * dy));
      for (std::size_t j = 0; j < ni; ++j)
        d[j] = 1.0 / (dy * dy) + model.value(xg[i], yg[j + 1]) - branch.eps[i];
      auto eig = tridiag_eigenpairs(d, e, 0, ni - 1);
      std::size_t k0 = 0;
      for (std::size_t k = 1; k < ni; ++k)
        if (std::abs(eig.values[k]) < std::abs(eig.values[k0])) k0 = k;
      // projected derivative
      std::vector<double> wx(ny), w0(ny);
      for (std::size_t j = 0; j < ny; ++j) {
        wx[j] = deriv.dw_dx[i][j];
        w0[j] = branch.w[i][j];
      }
      const double ov = inner_y(w0, wx, dy);
      for (std::size_t j = 0; j < ny; ++j) wx[j] -= ov * w0[j];
      std::vector<cplx> q(ny, 0.0);
      for (std::size_t k = 0; k < ni; ++k) {
        if (k == k0) continue;
        double c = 0.0;
        for (std::size_t j = 0; j < ni; ++j) c += eig.vectors[k][j] * wx[j + 1];
        c /= eig.values[k];
        for (std::size_t j = 0; j < ni; ++j) q[j + 1] += c * eig.vectors[k][j];
      }
      for (auto& v : q) v *= cplx(0.0, 1.0);
      R.chi.orders[1].powers[1][i] = Entry::make_field(std::move(q));
    }
  }
  return R;
}

}  // namespace adiax
