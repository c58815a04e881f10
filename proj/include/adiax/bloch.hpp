#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"
#include "ode.hpp"
#include "reduction.hpp"

namespace adiax {

// Fast-oscillating potential v(x, theta) = sum_n vhat_n(x) e^{i n theta} with
// phase derivative U(x) = dPhi/dx.
struct PeriodicPotential {
  int NF = 1;
  std::function<cplx(int, double)> vhat;
  std::function<double(double)> U;
  std::function<double(double)> dU;  // null: centered difference of U

  double U_at(double x) const {
    const double u = U ? U(x) : 1.0;
    if (!(std::abs(u) > 1e-12)) throw validation_error("PeriodicPotential: U(x) vanishes");
    return u;
  }
  double dU_at(double x) const {
    if (dU) return dU(x);
    if (!U) return 0.0;
    const double d = 1e-6;
    return (U(x + d) - U(x - d)) / (2.0 * d);
  }
  cplx coeff(int n, double x) const {
    return (std::abs(n) <= NF && vhat) ? vhat(n, x) : cplx(0.0);
  }
  double value(double x, double theta) const {
    cplx s = 0.0;
    for (int n = -NF; n <= NF; ++n) s += coeff(n, x) * std::exp(cplx(0.0, n * theta));
    return s.real();
  }
  bool real_symmetric(double x, double tol = 1e-12) const {
    for (int n = 0; n <= NF; ++n)
      if (std::abs(coeff(-n, x) - std::conj(coeff(n, x))) > tol) return false;
    return true;
  }
};

// v = 2 a cos(theta)
inline PeriodicPotential mathieu_potential(double a) {
  PeriodicPotential pot;
  pot.NF = 1;
  pot.vhat = [a](int n, double) { return n == 0 ? cplx(0.0) : cplx(a, 0.0); };
  pot.U = [](double) { return 1.0; };
  pot.dU = [](double) { return 0.0; };
  return pot;
}

inline double quasimomentum(double p, double U) {
  if (!(std::abs(U) > 1e-12)) throw validation_error("quasimomentum: U = 0");
  return p / U;
}

struct BlochModes {
  std::vector<double> values;
  std::vector<std::vector<cplx>> c;  // [band][n + N_pw]
  int N_pw = 0;
};

namespace detail {

inline BlochModes bloch_solve_raw(const PeriodicPotential& pot, double x, double P, int K,
                                  int N_pw) {
  const int dim = 2 * N_pw + 1;
  if (K < 1 || K > dim) throw validation_error("bloch solve: band count out of range");
  const double U = pot.U_at(x);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double q = U * (P + double(i - N_pw));
    M(i, i) = q * q + pot.coeff(0, x);
    for (int j = 0; j < dim; ++j)
      if (i != j) M(i, j) = pot.coeff((i - N_pw) - (j - N_pw), x);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  if (es.info() != Eigen::Success) throw numerical_error("EigSolveFailed", "plane-wave solve");
  BlochModes out;
  out.N_pw = N_pw;
  out.values.resize(K);
  out.c.assign(K, std::vector<cplx>(dim));
  for (int k = 0; k < K; ++k) {
    out.values[k] = es.eigenvalues()(k);
    for (int i = 0; i < dim; ++i) out.c[k][i] = es.eigenvectors()(i, k);
  }
  return out;
}

// deterministic gauge: rotate so the largest-magnitude coefficient is real positive
inline void gauge_fix(std::vector<cplx>& c) {
  std::size_t im = 0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (std::abs(c[i]) > std::abs(c[im])) im = i;
  const double a = std::abs(c[im]);
  if (a < 1e-300) return;
  const cplx ph = std::conj(c[im]) / a;
  for (auto& v : c) v *= ph;
}

}  // namespace detail

// Eigenpairs of the Hermitian plane-wave matrix diag U^2 (P+n)^2 plus
// off-diagonals vhat_{n-n'}; the last requested band must be insensitive to
// doubling the truncation.
inline BlochModes bloch_bands_fourier(const PeriodicPotential& pot, double x, double P, int K,
                                      int N_pw = 16, bool sensitivity = true) {
  BlochModes m = detail::bloch_solve_raw(pot, x, P, K, N_pw);
  if (sensitivity) {
    BlochModes m2 = detail::bloch_solve_raw(pot, x, P, K, 2 * N_pw);
    if (std::abs(m.values[K - 1] - m2.values[K - 1]) > 1e-8)
      throw numerical_error("TruncationTooSmall",
                            "band " + std::to_string(K) + " moves under plane-wave doubling");
  }
  return m;
}

// tr M(E) of the monodromy of -u'' + v(U xi, x) u = E u over one period 2 pi / U.
// E lies in a band at quasimomentum P iff tr M = 2 cos(2 pi P).
inline double bloch_discriminant_oracle(const PeriodicPotential& pot, double x, double E,
                                        double rtol = 1e-12) {
  if (!pot.real_symmetric(x))
    throw validation_error("bloch_discriminant_oracle: potential must be real");
  const double U = pot.U_at(x);
  const double L = 2.0 * pi / U;
  OdeRhs rhs = [&pot, x, E, U](double t, const OdeState& y, OdeState& dy) {
    const double q = pot.value(x, U * t) - E;
    dy[0] = y[1];
    dy[1] = q * y[0];
    dy[2] = y[3];
    dy[3] = q * y[2];
  };
  OdeState y0 = {1.0, 0.0, 0.0, 1.0};
  auto path = ode_integrate(rhs, y0, 0.0, L, rtol, 1e-14);
  const auto& yf = path.y.back();
  return yf[0] + yf[3];
}

struct BlochBand {
  int nu = 1;
  std::vector<double> P_grid;  // uniform on [0, 1)
  std::vector<double> x_grid;
  std::vector<std::vector<double>> E;  // [iP][ix]
  std::vector<double> E_minus, E_plus;
};

inline std::vector<BlochBand> tabulate_bands(const PeriodicPotential& pot,
                                             const std::vector<double>& x_grid, std::size_t nP,
                                             int K, int N_pw = 16, std::size_t threads = 1) {
  if (nP < 8) throw validation_error("tabulate_bands: need at least 8 quasimomentum nodes");
  std::vector<double> P_grid(nP);
  for (std::size_t j = 0; j < nP; ++j) P_grid[j] = double(j) / double(nP);
  std::vector<BlochBand> bands(K);
  for (int k = 0; k < K; ++k) {
    bands[k].nu = k + 1;
    bands[k].P_grid = P_grid;
    bands[k].x_grid = x_grid;
    bands[k].E.assign(nP, std::vector<double>(x_grid.size(), 0.0));
  }
  // sensitivity checked once per x at the band-edge quasimomentum
  for (std::size_t ix = 0; ix < x_grid.size(); ++ix)
    bloch_bands_fourier(pot, x_grid[ix], 0.5, K, N_pw, true);
  parallel_for(nP, threads, [&](std::size_t j) {
    for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
      auto m = detail::bloch_solve_raw(pot, x_grid[ix], P_grid[j], K, N_pw);
      for (int k = 0; k < K; ++k) bands[k].E[j][ix] = m.values[k];
    }
  });
  for (int k = 0; k < K; ++k) {
    auto& b = bands[k];
    b.E_minus.assign(x_grid.size(), 0.0);
    b.E_plus.assign(x_grid.size(), 0.0);
    for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
      double lo = b.E[0][ix], hi = b.E[0][ix];
      for (std::size_t j = 1; j < nP; ++j) {
        lo = std::min(lo, b.E[j][ix]);
        hi = std::max(hi, b.E[j][ix]);
      }
      b.E_minus[ix] = lo;
      b.E_plus[ix] = hi;
    }
  }
  return bands;
}

// Min distance from band nu to its neighbors over the shared (P, x) grid.
inline double band_gap_check(const std::vector<BlochBand>& bands, int nu, double gap_tol) {
  const BlochBand* b = nullptr;
  const BlochBand* below = nullptr;
  const BlochBand* above = nullptr;
  for (const auto& cand : bands) {
    if (cand.nu == nu) b = &cand;
    if (cand.nu == nu - 1) below = &cand;
    if (cand.nu == nu + 1) above = &cand;
  }
  if (!b) throw validation_error("band_gap_check: requested band not tabulated");
  if (!above) throw validation_error("band_gap_check: band above not tabulated");
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < b->P_grid.size(); ++j)
    for (std::size_t ix = 0; ix < b->x_grid.size(); ++ix) {
      gap = std::min(gap, above->E[j][ix] - b->E[j][ix]);
      if (below) gap = std::min(gap, b->E[j][ix] - below->E[j][ix]);
    }
  if (gap < gap_tol)
    throw numerical_error("StickingBands",
                          "band " + std::to_string(nu) + " gap " + std::to_string(gap));
  return gap;
}

namespace detail {

// periodic cubic Lagrange in P, linear in x
inline double band_interp(const BlochBand& b, double P, double x, bool derivative) {
  const std::size_t nP = b.P_grid.size();
  const double dP = 1.0 / double(nP);
  double Pr = P - std::floor(P);
  double s = Pr / dP;
  std::size_t j0 = std::min(nP - 1, std::size_t(s));
  double t = s - double(j0);
  auto wrap = [nP](long j) { return std::size_t(((j % long(nP)) + long(nP)) % long(nP)); };
  const std::size_t jm = wrap(long(j0) - 1), j1 = wrap(long(j0) + 1), j2 = wrap(long(j0) + 2);
  double w[4], dw[4];
  w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  dw[0] = -(3.0 * t * t - 6.0 * t + 2.0) / 6.0;
  dw[1] = (3.0 * t * t - 4.0 * t - 1.0) / 2.0;
  dw[2] = -(3.0 * t * t - 2.0 * t - 2.0) / 2.0;
  dw[3] = (3.0 * t * t - 1.0) / 6.0;

  const auto& xg = b.x_grid;
  std::size_t i0 = 0;
  double u = 0.0;
  if (xg.size() > 1) {
    const double dx = grid_step(xg);
    double si = std::clamp((x - xg.front()) / dx, 0.0, double(xg.size() - 1));
    i0 = std::min(xg.size() - 2, std::size_t(si));
    u = si - double(i0);
  }
  auto col = [&](std::size_t j) {
    const double a = b.E[j][i0];
    const double c = (xg.size() > 1) ? b.E[j][i0 + 1] : a;
    return (1.0 - u) * a + u * c;
  };
  double v = 0.0;
  const std::size_t idx[4] = {jm, j0, j1, j2};
  for (int q = 0; q < 4; ++q) v += (derivative ? dw[q] : w[q]) * col(idx[q]);
  return derivative ? v / dP : v;
}

}  // namespace detail

inline double band_value(const BlochBand& b, double P, double x) {
  return detail::band_interp(b, P, x, false);
}
inline double band_dP(const BlochBand& b, double P, double x) {
  return detail::band_interp(b, P, x, true);
}

// H_eff(p, x) = E^nu(P(p,x), x) + p^2 - P(p,x)^2 with P = p / U(x).
inline double effective_hamiltonian_bloch(const BlochBand& band, double p, double x, double U) {
  const double P = quasimomentum(p, U);
  return band_value(band, P, x) + p * p - P * P;
}

inline std::vector<double> make_periodic_y_grid(std::size_t n) {
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = 2.0 * pi * double(j) / double(n);
  return y;
}

namespace detail {

// forward/backward DFT restricted to modes |m| <= M on a uniform periodic grid
inline std::vector<cplx> dft_forward(const Field& f, int M) {
  const int n = int(f.size());
  std::vector<cplx> fh(2 * M + 1, 0.0);
  for (int m = -M; m <= M; ++m) {
    cplx s = 0.0;
    for (int j = 0; j < n; ++j)
      s += f[j] * std::exp(cplx(0.0, -2.0 * pi * double(m) * double(j) / double(n)));
    fh[m + M] = s / double(n);
  }
  return fh;
}

inline Field dft_backward(const std::vector<cplx>& fh, int M, std::size_t n) {
  Field f(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (int m = -M; m <= M; ++m)
      f[j] += fh[m + M] * std::exp(cplx(0.0, 2.0 * pi * double(m) * double(j) / double(n)));
  return f;
}

template <class Mult>
Field apply_fourier_multiplier(const Field& f, const Mult& mult) {
  const int n = int(f.size());
  const int M = (n - 1) / 2;
  auto fh = dft_forward(f, M);
  for (int m = -M; m <= M; ++m) fh[m + M] *= mult(m);
  return dft_backward(fh, M, std::size_t(n));
}

}  // namespace detail

// chi0 on one fast period: chi0(y) = sum_n c_n e^{i n y} / sqrt(2 pi), c from the
// plane-wave solve at P = p / U(x), deterministic gauge.
inline Field chi0_bloch(const PeriodicPotential& pot, int nu, double p, double x,
                        std::size_t n_y, int N_pw = 16) {
  const double U = pot.U_at(x);
  const double P = quasimomentum(p, U);
  auto modes = bloch_bands_fourier(pot, x, P, nu, N_pw, false);
  auto c = modes.c[nu - 1];
  detail::gauge_fix(c);
  Field chi(n_y, 0.0);
  for (std::size_t j = 0; j < n_y; ++j) {
    const double y = 2.0 * pi * double(j) / double(n_y);
    cplx s = 0.0;
    for (int n = -N_pw; n <= N_pw; ++n) s += c[n + N_pw] * std::exp(cplx(0.0, n * y));
    chi[j] = s / std::sqrt(2.0 * pi);
  }
  return chi;
}

// Operator family on the fast period: H0 = (p - i U d/dy)^2 + v(x, y),
// dH0/dp = 2 (p - i U d/dy), H1 = -U'(x) d/dy.
inline OperatorFamily make_bloch_family(const PeriodicPotential& pot, int nu, std::size_t n_y,
                                        int N_pw = 16) {
  OperatorFamily fam;
  fam.y_grid = make_periodic_y_grid(n_y);
  fam.periodic_y = true;
  if (std::size_t(2 * (N_pw + pot.NF) + 1) > n_y)
    throw validation_error("make_bloch_family: y-grid too coarse for the plane-wave content");

  fam.apply_H0 = [pot, nu](double p, double x, const Field& f) {
    const double U = pot.U_at(x);
    (void)nu;
    Field g = detail::apply_fourier_multiplier(f, [p, U](int m) {
      const double q = p + U * double(m);
      return cplx(q * q, 0.0);
    });
    const std::size_t n = f.size();
    for (std::size_t j = 0; j < n; ++j)
      g[j] += pot.value(x, 2.0 * pi * double(j) / double(n)) * f[j];
    return g;
  };
  fam.apply_dH0_dp = [pot](double p, double x, const Field& f) {
    const double U = pot.U_at(x);
    return detail::apply_fourier_multiplier(
        f, [p, U](int m) { return cplx(2.0 * (p + U * double(m)), 0.0); });
  };
  fam.apply_H1 = [pot](double, double x, const Field& f) {
    const double du = pot.dU_at(x);
    return detail::apply_fourier_multiplier(
        f, [du](int m) { return cplx(0.0, -du * double(m)); });
  };
  fam.time_derivative_chi0 = nullptr;
  fam.dchi0_dp = nullptr;
  fam.chi0 = [pot, nu, n_y, N_pw](double p, double x) {
    return chi0_bloch(pot, nu, p, x, n_y, N_pw);
  };
  fam.dchi0_dx = [pot, nu, n_y, N_pw](double p, double x) {
    const double dxf = 1e-5;
    OperatorFamily probe;  // only for inner products
    probe.y_grid = make_periodic_y_grid(n_y);
    probe.periodic_y = true;
    Field c0 = chi0_bloch(pot, nu, p, x, n_y, N_pw);
    Field cp = chi0_bloch(pot, nu, p, x + dxf, n_y, N_pw);
    Field cm = chi0_bloch(pot, nu, p, x - dxf, n_y, N_pw);
    auto align = [&](Field& f) {
      cplx ov = probe.inner(c0, f);
      const double a = std::abs(ov);
      if (a > 1e-300) {
        const cplx ph = std::conj(ov) / a;
        for (auto& v : f) v *= ph;
      }
    };
    align(cp);
    align(cm);
    Field g(n_y);
    for (std::size_t j = 0; j < n_y; ++j) g[j] = (cp[j] - cm[j]) / (2.0 * dxf);
    const cplx par = probe.inner(c0, g);
    for (std::size_t j = 0; j < n_y; ++j) g[j] -= par * c0[j];
    return g;
  };
  fam.shifted_interior = nullptr;
  return fam;
}

// Effective model whose H_eff and dH_eff/dp come from on-the-fly plane-wave
// solves (Hellmann-Feynman for the dispersion slope).
inline EffectiveModel make_bloch_effective(const PeriodicPotential& pot, int nu,
                                           const std::vector<double>& x_grid, int N_pw = 16) {
  EffectiveModel m;
  m.nu = nu;
  m.x_grid = x_grid;
  m.Heff_override = [pot, nu, N_pw](double p, double x) {
    const double U = pot.U_at(x);
    const double P = quasimomentum(p, U);
    auto modes = bloch_bands_fourier(pot, x, P, nu, N_pw, false);
    return modes.values[nu - 1] + p * p - P * P;
  };
  m.dHeff_dp_override = [pot, nu, N_pw](double p, double x) {
    const double U = pot.U_at(x);
    const double P = quasimomentum(p, U);
    auto modes = bloch_bands_fourier(pot, x, P, nu, N_pw, false);
    const auto& c = modes.c[nu - 1];
    double dEdP = 0.0;
    for (int n = -N_pw; n <= N_pw; ++n)
      dEdP += 2.0 * U * U * (P + double(n)) * std::norm(c[n + N_pw]);
    return dEdP / U + 2.0 * p - 2.0 * P / U;
  };
  return m;
}

}  // namespace adiax
