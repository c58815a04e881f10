#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"

namespace adiax {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(double t, const OdeState& y, OdeState& dy)>;

struct OdePath {
  std::vector<double> t;
  std::vector<OdeState> y;
  std::vector<OdeState> f;  // derivatives at the nodes, for Hermite evaluation

  std::size_t segment(double tq) const {
    if (t.size() < 2) throw validation_error("OdePath too short");
    std::size_t lo = 0, hi = t.size() - 1;
    const bool fwd = t.back() >= t.front();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (fwd ? (t[mid] <= tq) : (t[mid] >= tq))
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  OdeState eval(double tq) const {
    const std::size_t i = segment(tq);
    const double h = t[i + 1] - t[i];
    const double s = (tq - t[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    OdeState out(y[i].size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = h00 * y[i][k] + h10 * h * f[i][k] + h01 * y[i + 1][k] + h11 * h * f[i + 1][k];
    return out;
  }
};

// Dormand-Prince 5(4) with proportional step control.
inline OdePath ode_integrate(const OdeRhs& rhs, OdeState y0, double t0, double t1, double rtol,
                             double atol = 1e-12, std::size_t max_steps = 2000000) {
  static const double A[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
  static const double B4[7] = {5179.0 / 57600, 0,           7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  const std::size_t n = y0.size();
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  OdePath path;
  OdeState k[7], ytmp(n), ynew(n), f0(n);
  for (auto& kk : k) kk.resize(n);
  rhs(t0, y0, f0);
  path.t.push_back(t0);
  path.y.push_back(y0);
  path.f.push_back(f0);
  double t = t0;
  double dt = dir * std::max(1e-8, std::abs(t1 - t0) * 1e-4);
  std::size_t steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > max_steps) throw numerical_error("OdeStepLimit", "step limit exceeded");
    if (dir * (t + dt - t1) > 0) dt = t1 - t;
    k[0] = f0;
    for (int s = 1; s < 7; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += A[s][j] * k[j][i];
        ytmp[i] = y0[i] + dt * acc;
      }
      rhs(t + C[s] * dt, ytmp, k[s]);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = ytmp[i];  // stage 7 state equals the 5th-order solution
      double e4 = 0.0;
      for (int j = 0; j < 7; ++j) e4 += B4[j] * k[j][i];
      const double diff = std::abs(ynew[i] - (y0[i] + dt * e4));
      const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(ynew[i]));
      err = std::max(err, diff / sc);
    }
    if (err <= 1.0) {
      t += dt;
      y0 = ynew;
      f0 = k[6];  // FSAL
      path.t.push_back(t);
      path.y.push_back(y0);
      path.f.push_back(f0);
    }
    const double fac = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    dt *= std::clamp(fac, 0.2, 5.0);
  }
  return path;
}

// First root of g(t, y(t)) = 0 with sign change on a stored segment, refined on
// the Hermite interpolant.
inline double ode_event_time(const OdePath& path, const std::function<double(double, const OdeState&)>& g,
                             std::size_t seg, double tol = 1e-12) {
  double a = path.t[seg], b = path.t[seg + 1];
  double ga = g(a, path.y[seg]);
  for (int it = 0; it < 200 && std::abs(b - a) > tol * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double gm = g(m, path.eval(m));
    if ((ga <= 0 && gm <= 0) || (ga > 0 && gm > 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace adiax
