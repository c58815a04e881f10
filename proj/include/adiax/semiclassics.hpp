#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "core.hpp"
#include "ode.hpp"

namespace adiax {

using TransportMatrix = std::vector<std::vector<cplx>>;

struct HamiltonianField {
  std::function<double(double, double)> H;      // (p, x)
  std::function<double(double, double)> dH_dp;  // null: centered difference
  std::function<double(double, double)> dH_dx;
  std::function<TransportMatrix(double, double)> L1;  // null: zero transport generator
  double fd_step = 1e-6;

  double Hp(double p, double x) const {
    if (dH_dp) return dH_dp(p, x);
    const double d = fd_step * std::max(1.0, std::abs(p));
    return (H(p + d, x) - H(p - d, x)) / (2.0 * d);
  }
  double Hx(double p, double x) const {
    if (dH_dx) return dH_dx(p, x);
    const double d = fd_step * std::max(1.0, std::abs(x));
    return (H(p, x + d) - H(p, x - d)) / (2.0 * d);
  }
  // second derivatives differentiate the first-derivative evaluators
  double second_step(double s) const {
    return (dH_dp && dH_dx ? 1e-6 : 1e-4) * std::max(1.0, std::abs(s));
  }
  double Hpp(double p, double x) const {
    const double d = second_step(p);
    return (Hp(p + d, x) - Hp(p - d, x)) / (2.0 * d);
  }
  double Hpx(double p, double x) const {
    const double d = second_step(x);
    return (Hp(p, x + d) - Hp(p, x - d)) / (2.0 * d);
  }
  double Hxx(double p, double x) const {
    const double d = second_step(x);
    return (Hx(p, x + d) - Hx(p, x - d)) / (2.0 * d);
  }
};

inline HamiltonianField potential_field(std::function<double(double)> v,
                                        std::function<double(double)> dv = nullptr) {
  HamiltonianField f;
  f.H = [v](double p, double x) { return 0.5 * p * p + v(x); };
  f.dH_dp = [](double p, double) { return p; };
  if (dv)
    f.dH_dx = [dv](double, double x) { return dv(x); };
  return f;
}

// max gap between analytic and centered-difference first derivatives
inline double derivative_consistency(const HamiltonianField& f,
                                     const std::vector<std::pair<double, double>>& samples) {
  double worst = 0.0;
  for (auto [p, x] : samples) {
    const double d = f.fd_step;
    if (f.dH_dp)
      worst = std::max(worst,
                       std::abs(f.dH_dp(p, x) - (f.H(p + d, x) - f.H(p - d, x)) / (2.0 * d)));
    if (f.dH_dx)
      worst = std::max(worst,
                       std::abs(f.dH_dx(p, x) - (f.H(p, x + d) - f.H(p, x - d)) / (2.0 * d)));
  }
  return worst;
}

struct Trajectory {
  std::vector<double> t, x, p, S, J, dp;
  std::vector<double> energy;
  OdePath path;  // state [x, p, S, dx, dp] for dense evaluation

  double energy_drift() const {
    double w = 0.0;
    for (double e : energy) w = std::max(w, std::abs(e - energy.front()));
    return w;
  }
};

// x' = dH/dp, p' = -dH/dx, S' = p dH/dp - H, variational (dx, dp)(0) = (1, S0'').
inline Trajectory integrate_trajectory(const HamiltonianField& field, double p0, double x0,
                                       double T, double rtol = 1e-10, double S0 = 0.0,
                                       double S0pp = 0.0) {
  if (!(T > 0.0)) throw validation_error("integrate_trajectory: need T > 0");
  OdeRhs rhs = [&field](double, const OdeState& y, OdeState& dy) {
    const double p = y[1], x = y[0];
    const double hp = field.Hp(p, x), hx = field.Hx(p, x);
    dy[0] = hp;
    dy[1] = -hx;
    dy[2] = p * hp - field.H(p, x);
    const double hpp = field.Hpp(p, x), hpx = field.Hpx(p, x), hxx = field.Hxx(p, x);
    dy[3] = hpx * y[3] + hpp * y[4];
    dy[4] = -hxx * y[3] - hpx * y[4];
  };
  OdeState y0 = {x0, p0, S0, 1.0, S0pp};
  Trajectory tr;
  tr.path = ode_integrate(rhs, y0, 0.0, T, rtol, 1e-13);
  const std::size_t n = tr.path.t.size();
  tr.t = tr.path.t;
  tr.x.resize(n);
  tr.p.resize(n);
  tr.S.resize(n);
  tr.J.resize(n);
  tr.dp.resize(n);
  tr.energy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tr.x[i] = tr.path.y[i][0];
    tr.p[i] = tr.path.y[i][1];
    tr.S[i] = tr.path.y[i][2];
    tr.J[i] = tr.path.y[i][3];
    tr.dp[i] = tr.path.y[i][4];
    tr.energy[i] = field.H(tr.p[i], tr.x[i]);
  }
  return tr;
}

struct FanMember {
  double x0 = 0.0;
  cplx phi0 = 1.0;
  std::function<cplx(double)> phi_t;  // null: constant phi0
  Trajectory traj;
};

inline std::vector<FanMember> launch_fan(const HamiltonianField& field,
                                         const std::function<double(double)>& S0,
                                         const std::function<double(double)>& dS0,
                                         const std::function<double(double)>& d2S0,
                                         const std::function<cplx(double)>& phi0,
                                         const std::vector<double>& x0_nodes, double T,
                                         double rtol = 1e-10, std::size_t threads = 1) {
  std::vector<FanMember> fan(x0_nodes.size());
  parallel_for(x0_nodes.size(), threads, [&](std::size_t i) {
    const double x0 = x0_nodes[i];
    fan[i].x0 = x0;
    fan[i].phi0 = phi0 ? phi0(x0) : cplx(1.0);
    fan[i].traj = integrate_trajectory(field, dS0 ? dS0(x0) : 0.0, x0, T, rtol,
                                       S0 ? S0(x0) : 0.0, d2S0 ? d2S0(x0) : 0.0);
  });
  return fan;
}

// psi(x) = [e^{iS/h} phi / sqrt(J)] at x0 = X0(x, t); zero outside the
// transported support.
inline std::vector<cplx> wkb_evaluate(const std::vector<FanMember>& fan, double t,
                                      const std::vector<double>& x_query, double h,
                                      double J_tol = 1e-6) {
  if (fan.size() < 2) throw validation_error("wkb_evaluate: need at least two fan members");
  const std::size_t n = fan.size();
  std::vector<double> xi(n), S(n), J(n);
  std::vector<cplx> phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = fan[i].traj.path.eval(t);
    xi[i] = y[0];
    S[i] = y[2];
    J[i] = y[3];
    if (J[i] < J_tol) throw caustic_encountered("fan Jacobian " + std::to_string(J[i]));
    phi[i] = fan[i].phi_t ? fan[i].phi_t(t) : fan[i].phi0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xi[i + 1] > xi[i]))
      throw numerical_error("NonMonotoneMap", "transported fan is not strictly increasing");

  std::vector<cplx> out(x_query.size(), 0.0);
  for (std::size_t q = 0; q < x_query.size(); ++q) {
    const double x = x_query[q];
    if (x < xi.front() || x > xi.back()) continue;
    auto it = std::upper_bound(xi.begin(), xi.end(), x);
    std::size_t k = std::min(n - 2, std::size_t(std::max<long>(0, (it - xi.begin()) - 1)));
    const double s = (x - xi[k]) / (xi[k + 1] - xi[k]);
    const double Sq = (1 - s) * S[k] + s * S[k + 1];
    const double Jq = (1 - s) * J[k] + s * J[k + 1];
    const cplx pq = (1 - s) * phi[k] + s * phi[k + 1];
    out[q] = std::exp(cplx(0.0, Sq / h)) * pq / std::sqrt(Jq);
  }
  return out;
}

namespace detail {

inline TransportMatrix l1_at(const HamiltonianField& field, double p, double x, std::size_t r) {
  if (!field.L1) return TransportMatrix(r, std::vector<cplx>(r, 0.0));
  TransportMatrix m = field.L1(p, x);
  if (m.size() != r || (r && m[0].size() != r))
    throw validation_error("transport: generator dimension mismatch");
  return m;
}

inline std::vector<cplx> l1_apply(const TransportMatrix& m, const std::vector<cplx>& v) {
  std::vector<cplx> w(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) w[i] += m[i][j] * v[j];
  return w;
}

}  // namespace detail

// Classical RK4 for d phi/dt = -i L1(p(t), x(t)) phi on the dense trajectory.
inline std::vector<std::vector<cplx>> transport_solve(const HamiltonianField& field,
                                                      const Trajectory& traj,
                                                      const std::vector<cplx>& phi0,
                                                      std::size_t n_sub = 8192) {
  const std::size_t r = phi0.size();
  if (r == 0) throw validation_error("transport_solve: empty amplitude");
  if (field.L1) {
    auto probe = field.L1(traj.p.front(), traj.x.front());
    if (probe.size() != r || probe[0].size() != r)
      throw validation_error("transport_solve: generator dimension mismatch");
  }
  const double t0 = traj.t.front(), t1 = traj.t.back();
  const double dt = (t1 - t0) / double(n_sub);
  auto rhs_at = [&](double t, const std::vector<cplx>& v) {
    const auto y = traj.path.eval(t);
    auto m = detail::l1_at(field, y[1], y[0], r);
    auto w = detail::l1_apply(m, v);
    for (auto& c : w) c *= cplx(0.0, -1.0);
    return w;
  };
  std::vector<std::vector<cplx>> at_nodes(traj.t.size());
  std::vector<cplx> v = phi0;
  std::size_t node = 0;
  auto record_until = [&](double tcur) {
    while (node < traj.t.size() && traj.t[node] <= tcur + 1e-14) at_nodes[node++] = v;
  };
  record_until(t0);
  for (std::size_t s = 0; s < n_sub; ++s) {
    const double t = t0 + double(s) * dt;
    auto k1 = rhs_at(t, v);
    std::vector<cplx> tmp(r);
    for (std::size_t i = 0; i < r; ++i) tmp[i] = v[i] + 0.5 * dt * k1[i];
    auto k2 = rhs_at(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < r; ++i) tmp[i] = v[i] + 0.5 * dt * k2[i];
    auto k3 = rhs_at(t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < r; ++i) tmp[i] = v[i] + dt * k3[i];
    auto k4 = rhs_at(t + dt, tmp);
    for (std::size_t i = 0; i < r; ++i)
      v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    record_until(t0 + double(s + 1) * dt);
  }
  while (node < traj.t.size()) at_nodes[node++] = v;
  return at_nodes;
}

// Composite-Simpson integral of the scalar generator along the same dense path.
inline cplx transport_phase_integral(const HamiltonianField& field, const Trajectory& traj,
                                     std::size_t n_sub = 8192) {
  if (n_sub % 2) ++n_sub;
  const double t0 = traj.t.front(), t1 = traj.t.back();
  const double dt = (t1 - t0) / double(n_sub);
  auto val = [&](double t) {
    const auto y = traj.path.eval(t);
    return detail::l1_at(field, y[1], y[0], 1)[0][0];
  };
  cplx s = val(t0) + val(t1);
  for (std::size_t i = 1; i < n_sub; ++i) s += val(t0 + double(i) * dt) * (i % 2 ? 4.0 : 2.0);
  return s * dt / 3.0;
}

struct BohrSommerfeldProblem {
  std::function<double(double)> v;
  double a = 0.0, b = 0.0;  // axis window containing the well
  double h = 0.1;
  std::size_t scan_n = 4000;
  std::size_t quad_n = 200;
};

namespace detail {

inline void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(pi * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * double(j) + 1.0) * x * p1 - double(j) * p2) / (double(j) + 1.0);
      }
      pp = double(n) * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

// turning points of E - v on [a, b]; throws MultiWell on more than one pair
inline std::pair<double, double> turning_points(const BohrSommerfeldProblem& prob, double E) {
  const std::size_t n = prob.scan_n;
  const double dx = (prob.b - prob.a) / double(n);
  std::vector<std::pair<double, double>> brackets;
  double prev = E - prob.v(prob.a);
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = prob.a + double(i) * dx;
    const double cur = E - prob.v(x);
    if ((prev < 0.0) != (cur < 0.0)) brackets.emplace_back(x - dx, x);
    prev = cur;
  }
  if (brackets.size() > 2) throw multi_well("more than two classical turning points");
  if (brackets.size() != 2) throw no_solution("energy has no interior turning-point pair");
  auto refine = [&](double lo, double hi) {
    double flo = E - prob.v(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = E - prob.v(mid);
      if ((flo < 0.0) != (fm < 0.0))
        hi = mid;
      else {
        lo = mid;
        flo = fm;
      }
    }
    return 0.5 * (lo + hi);
  };
  return {refine(brackets[0].first, brackets[0].second),
          refine(brackets[1].first, brackets[1].second)};
}

}  // namespace detail

// (1/pi) integral of sqrt(2 (E - v)) between the turning points; the
// x = m + r sin(theta) substitution removes the endpoint square roots.
inline double bs_action(const BohrSommerfeldProblem& prob, double E) {
  auto [xm, xp] = detail::turning_points(prob, E);
  const double m = 0.5 * (xm + xp), r = 0.5 * (xp - xm);
  std::vector<double> gn, gw;
  detail::gauss_legendre(prob.quad_n, gn, gw);
  double acc = 0.0;
  for (std::size_t i = 0; i < gn.size(); ++i) {
    const double th = gn[i] * pi / 2.0;
    const double x = m + r * std::sin(th);
    const double q = std::max(0.0, 2.0 * (E - prob.v(x)));
    acc += gw[i] * (pi / 2.0) * std::sqrt(q) * r * std::cos(th);
  }
  return acc / pi;
}

// Solves (1/pi) * action(E) = h (n + 1/2) by bisection on the monotone action.
inline std::vector<double> bohr_sommerfeld(const BohrSommerfeldProblem& prob, int n_lo,
                                           int n_hi) {
  if (n_lo < 0 || n_hi < n_lo) throw validation_error("bohr_sommerfeld: bad quantum range");
  // well floor and rim from a scan
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= prob.scan_n; ++i) {
    const double x = prob.a + (prob.b - prob.a) * double(i) / double(prob.scan_n);
    vmin = std::min(vmin, prob.v(x));
  }
  const double rim = std::min(prob.v(prob.a), prob.v(prob.b));
  if (!(rim > vmin)) throw no_solution("no confining well on the window");
  const double Ehi = vmin + (rim - vmin) * (1.0 - 1e-9);
  double act_hi;
  try {
    act_hi = bs_action(prob, Ehi);
  } catch (const no_solution&) {
    throw no_solution("well rim unreachable by the action scan");
  }
  std::vector<double> out;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double target = prob.h * (double(n) + 0.5);
    if (target > act_hi) throw no_solution("requested level exceeds the well action");
    double lo = vmin + (rim - vmin) * 1e-12, hi = Ehi;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      double am;
      try {
        am = bs_action(prob, mid);
      } catch (const no_solution&) {
        lo = mid;  // below the resolvable floor
        continue;
      }
      (am < target ? lo : hi) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

struct FloquetResult {
  double T = 0.0;
  std::vector<cplx> lambda;
  std::vector<double> beta;  // arg(lambda)/T in (-pi/T, pi/T]
};

// Period by Poincare return to x0 with matching momentum sign, then the
// transport monodromy eigenvalues over one period.
inline FloquetResult floquet_exponents(const HamiltonianField& field, double p0, double x0,
                                       double T_cap = 1000.0) {
  const double probe = 1e-3;
  double T = 0.0;
  {
    double horizon = probe;
    bool found = false;
    while (!found && horizon < T_cap) {
      horizon = std::min(T_cap, horizon * 8.0);
      auto tr = integrate_trajectory(field, p0, x0, horizon);
      std::function<double(double, const OdeState&)> g = [x0](double, const OdeState& y) {
        return y[0] - x0;
      };
      for (std::size_t s = 0; s + 1 < tr.path.t.size(); ++s) {
        if (tr.path.t[s] < probe) continue;
        const double g0 = g(0.0, tr.path.y[s]), g1 = g(0.0, tr.path.y[s + 1]);
        if ((g0 < 0.0) == (g1 < 0.0)) continue;
        const double tc = ode_event_time(tr.path, g, s);
        const auto yc = tr.path.eval(tc);
        if (yc[1] * p0 > 0.0 || std::abs(p0) < 1e-14) {
          T = tc;
          found = true;
          break;
        }
      }
    }
    if (!found) throw numerical_error("NoClosedOrbit", "no Poincare return before the horizon");
  }

  FloquetResult out;
  out.T = T;
  std::size_t r = 1;
  if (field.L1) r = field.L1(p0, x0).size();
  auto traj = integrate_trajectory(field, p0, x0, T);
  Eigen::MatrixXcd M(r, r);
  for (std::size_t col = 0; col < r; ++col) {
    std::vector<cplx> e(r, 0.0);
    e[col] = 1.0;
    auto cols = transport_solve(field, traj, e);
    for (std::size_t i = 0; i < r; ++i) M(long(i), long(col)) = cols.back()[i];
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
  if (es.info() != Eigen::Success)
    throw numerical_error("EigSolveFailed", "transport monodromy");
  for (std::size_t j = 0; j < r; ++j) {
    const cplx lam = es.eigenvalues()(long(j));
    if (std::abs(std::abs(lam) - 1.0) > 1e-8)
      throw numerical_error("NonUnimodularMonodromy",
                            "|lambda| = " + std::to_string(std::abs(lam)));
    out.lambda.push_back(lam);
    out.beta.push_back(std::arg(lam) / T);
  }
  std::sort(out.beta.begin(), out.beta.end());
  return out;
}

struct SpectralSeries {
  double h = 0.0;
  std::vector<int> n;
  std::vector<double> E;
  std::vector<std::vector<double>> beta;
  std::vector<std::vector<double>> E_split;  // E + h beta_j
};

inline SpectralSeries spectral_series(const HamiltonianField& field,
                                      const BohrSommerfeldProblem& prob, int n_lo, int n_hi) {
  SpectralSeries ser;
  ser.h = prob.h;
  auto levels = bohr_sommerfeld(prob, n_lo, n_hi);
  // orbit seed at the well minimum
  double xm = prob.a, vm = prob.v(prob.a);
  for (std::size_t i = 0; i <= prob.scan_n; ++i) {
    const double x = prob.a + (prob.b - prob.a) * double(i) / double(prob.scan_n);
    if (prob.v(x) < vm) {
      vm = prob.v(x);
      xm = x;
    }
  }
  for (int n = n_lo; n <= n_hi; ++n) {
    const double E = levels[std::size_t(n - n_lo)];
    const double p0 = std::sqrt(std::max(0.0, 2.0 * (E - vm)));
    auto fl = floquet_exponents(field, p0, xm);
    ser.n.push_back(n);
    ser.E.push_back(E);
    ser.beta.push_back(fl.beta);
    std::vector<double> split;
    for (double b : fl.beta) split.push_back(E + prob.h * b);
    ser.E_split.push_back(split);
  }
  return ser;
}

enum class ScatterOutcome { Transmitted, Reflected };

struct ScatteringAsymptotics {
  double E = 0.0;
  ScatterOutcome outcome = ScatterOutcome::Transmitted;
  double p_minus = 0.0, p_plus = 0.0;  // asymptotic momenta (transmitted case)
  double x_f = 0.0;                    // reflection turning point
  bool reflected_phase = false;        // e^{-i pi/2} factor on the reflected wave
};

// Above-barrier: p_- = sqrt(2 (E - v_-)), p_+ = sqrt(2 (E - v_+)), unit
// transmitted amplitude modulo O(h^inf). Below-barrier: leftmost root of
// v_eff = E and the e^{-i pi/2} reflected phase.
inline ScatteringAsymptotics scatter_1d(const std::function<double(double)>& v_eff, double a,
                                        double b, double E, double h, double v_minus,
                                        double v_plus, std::size_t scan_n = 20000) {
  (void)h;
  if (!(E > v_minus))
    throw validation_error("scatter_1d: no propagating incoming channel (E <= v_-)");
  double vmax = -std::numeric_limits<double>::infinity();
  const double dx = (b - a) / double(scan_n);
  for (std::size_t i = 0; i <= scan_n; ++i)
    vmax = std::max(vmax, v_eff(a + double(i) * dx));
  ScatteringAsymptotics out;
  out.E = E;
  if (E > vmax) {
    out.outcome = ScatterOutcome::Transmitted;
    out.p_minus = std::sqrt(2.0 * (E - v_minus));
    out.p_plus = std::sqrt(2.0 * (E - v_plus));
    return out;
  }
  out.outcome = ScatterOutcome::Reflected;
  out.reflected_phase = true;
  double prev = v_eff(a) - E;
  bool found = false;
  for (std::size_t i = 1; i <= scan_n; ++i) {
    const double x = a + double(i) * dx;
    const double cur = v_eff(x) - E;
    if ((prev < 0.0) && (cur >= 0.0)) {
      double lo = x - dx, hi = x;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((v_eff(mid) - E < 0.0) ? lo : hi) = mid;
      }
      out.x_f = 0.5 * (lo + hi);
      found = true;
      break;
    }
    prev = cur;
  }
  if (!found)
    throw numerical_error("TurningPointNotFound", "no upward crossing of E on the window");
  return out;
}

}  // namespace adiax
