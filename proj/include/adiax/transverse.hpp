#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "core.hpp"
#include "tridiag.hpp"

namespace adiax {

struct ConfinementModel {
  enum class Kind { RigidWall, PowerWell, Harmonic, Tabulated };
  Kind kind = Kind::RigidWall;

  double y1 = 0.0, y2 = 1.0;                    // RigidWall
  std::function<double(double)> width;          // PowerWell D(x) > 0
  int m = 1;                                    // PowerWell exponent, v ~ ((y-c)/D)^(2m)
  double amp = 1.0, offset = 0.0, center = 0.0; // PowerWell scale factors
  std::function<double(double)> omega;          // Harmonic, omega(x) > 0
  std::function<double(double, double)> table;  // Tabulated v(x, y)

  static ConfinementModel rigid_wall(double a, double b) {
    ConfinementModel c;
    c.kind = Kind::RigidWall;
    c.y1 = a;
    c.y2 = b;
    if (!(b > a)) throw validation_error("rigid_wall: y2 must exceed y1");
    return c;
  }
  static ConfinementModel power_well(std::function<double(double)> D, int m, double amp = 1.0,
                                     double offset = 0.0, double center = 0.0) {
    ConfinementModel c;
    c.kind = Kind::PowerWell;
    c.width = std::move(D);
    c.m = m;
    c.amp = amp;
    c.offset = offset;
    c.center = center;
    if (m < 1) throw validation_error("power_well: m must be >= 1");
    return c;
  }
  static ConfinementModel harmonic(std::function<double(double)> om) {
    ConfinementModel c;
    c.kind = Kind::Harmonic;
    c.omega = std::move(om);
    return c;
  }
  static ConfinementModel tabulated(std::function<double(double, double)> v) {
    ConfinementModel c;
    c.kind = Kind::Tabulated;
    c.table = std::move(v);
    return c;
  }

  bool rigid() const { return kind == Kind::RigidWall; }

  double value(double x, double y) const {
    switch (kind) {
      case Kind::RigidWall:
        return 0.0;
      case Kind::PowerWell: {
        const double D = width(x);
        if (!(D > 0.0)) throw validation_error("power_well: width must stay positive");
        double r = (y - center) / D;
        double r2m = 1.0;
        for (int k = 0; k < m; ++k) r2m *= r * r;
        return amp * r2m + offset;
      }
      case Kind::Harmonic: {
        const double w = omega(x);
        if (!(w > 0.0)) throw validation_error("harmonic: omega must stay positive");
        return 0.5 * w * w * y * y;
      }
      case Kind::Tabulated:
        return table(x, y);
    }
    return 0.0;
  }
};

struct TransverseLevels {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // full y-grid samples, trapezoid-normalized
};

// K lowest Dirichlet eigenpairs of -1/2 d^2/dy^2 + v(x, .) on y_grid.
inline TransverseLevels solve_transverse_at_x(const ConfinementModel& model, double x,
                                              const std::vector<double>& y_grid, std::size_t K) {
  const std::size_t n = y_grid.size();
  if (n < 4) throw validation_error("solve_transverse_at_x: y-grid too small");
  const std::size_t ni = n - 2;
  if (K > ni) throw validation_error("solve_transverse_at_x: K exceeds interior node count");
  const double dy = grid_step(y_grid);
  std::vector<double> d(ni), e(ni - 1, -0.5 / (dy * dy));
  for (std::size_t i = 0; i < ni; ++i) d[i] = 1.0 / (dy * dy) + model.value(x, y_grid[i + 1]);
  auto eig = tridiag_eigenpairs(d, e, 0, K - 1);
  TransverseLevels out;
  out.values = eig.values;
  out.vectors.resize(K);
  const double scale = 1.0 / std::sqrt(dy);
  for (std::size_t k = 0; k < K; ++k) {
    out.vectors[k].assign(n, 0.0);
    for (std::size_t i = 0; i < ni; ++i) out.vectors[k][i + 1] = eig.vectors[k][i] * scale;
  }
  return out;
}

struct TermBranch {
  int nu = 1;  // 1-based level index
  std::vector<double> x_grid;
  std::vector<double> y_grid;
  std::vector<double> eps;                  // eps(x) along the branch
  std::vector<std::vector<double>> w;       // w(x_i, .) full y-grid, trapezoid-normalized
  double gap_below = 0.0, gap_above = 0.0;  // min over x to the neighbours
};

// Track the first K transverse levels across x_grid with overlap continuation.
inline std::vector<TermBranch> track_branches(const ConfinementModel& model,
                                              const std::vector<double>& x_grid,
                                              const std::vector<double>& y_grid, std::size_t K,
                                              double gap_tol = 1e-6, unsigned threads = 1) {
  if (x_grid.size() < 3) throw validation_error("track_branches: need >= 3 x-nodes");
  const std::size_t ni = y_grid.size() - 2;
  const std::size_t kw = std::min(K + 1, ni);  // one extra level for the upper gap
  const double dy = grid_step(y_grid);

  std::vector<TransverseLevels> per_x(x_grid.size());
  parallel_for(x_grid.size(), threads,
               [&](std::size_t i) { per_x[i] = solve_transverse_at_x(model, x_grid[i], y_grid, kw); });

  for (std::size_t i = 0; i < x_grid.size(); ++i)
    for (std::size_t k = 0; k + 1 < kw; ++k)
      if (per_x[i].values[k + 1] - per_x[i].values[k] < gap_tol)
        throw degenerate_term("transverse levels " + std::to_string(k + 1) + "," +
                              std::to_string(k + 2) + " separated by less than gap_tol at x=" +
                              std::to_string(x_grid[i]));

  // Deterministic sign at the first node: largest-magnitude component positive.
  auto fix_sign = [](std::vector<double>& v) {
    double best = 0.0;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i]) > best) {
        best = std::abs(v[i]);
        bi = i;
      }
    if (v[bi] < 0)
      for (auto& c : v) c = -c;
  };
  for (auto& vec : per_x[0].vectors) fix_sign(vec);

  // columns[i][k] = level index at x_i continuing branch k.
  std::vector<std::vector<std::size_t>> assign(x_grid.size(), std::vector<std::size_t>(kw));
  for (std::size_t k = 0; k < kw; ++k) assign[0][k] = k;

  for (std::size_t i = 1; i < x_grid.size(); ++i) {
    std::vector<bool> used(kw, false);
    for (std::size_t k = 0; k < kw; ++k) {
      const auto& prev = per_x[i - 1].vectors[assign[i - 1][k]];
      double best = -1.0, second = -1.0;
      std::size_t bi = 0;
      for (std::size_t c = 0; c < kw; ++c) {
        if (used[c]) continue;
        const double ov = std::abs(inner_y(prev, per_x[i].vectors[c], dy));
        if (ov > best) {
          second = best;
          best = ov;
          bi = c;
        } else if (ov > second) {
          second = ov;
        }
      }
      if (second >= 0.0 && best - second < 0.1)
        throw numerical_error("AmbiguousOverlap",
                              "branch continuation ambiguous at x=" + std::to_string(x_grid[i]));
      used[bi] = true;
      assign[i][k] = bi;
      if (inner_y(prev, per_x[i].vectors[bi], dy) < 0.0)
        for (auto& c : per_x[i].vectors[bi]) c = -c;
    }
  }

  std::vector<TermBranch> branches(std::min(K, kw));
  for (std::size_t k = 0; k < branches.size(); ++k) {
    TermBranch& br = branches[k];
    br.nu = int(k) + 1;
    br.x_grid = x_grid;
    br.y_grid = y_grid;
    br.eps.resize(x_grid.size());
    br.w.resize(x_grid.size());
    double gb = std::numeric_limits<double>::infinity();
    double ga = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      const std::size_t c = assign[i][k];
      br.eps[i] = per_x[i].values[c];
      br.w[i] = per_x[i].vectors[c];
      if (k > 0) gb = std::min(gb, br.eps[i] - per_x[i].values[assign[i][k - 1]]);
      if (k + 1 < kw) ga = std::min(ga, per_x[i].values[assign[i][k + 1]] - br.eps[i]);
    }
    br.gap_below = gb;
    br.gap_above = ga;
  }
  return branches;
}

struct BranchDerivatives {
  std::vector<double> deps_dx;
  std::vector<std::vector<double>> dw_dx;  // same layout as branch.w
  double max_self_overlap = 0.0;           // max_x |<w, dw/dx>|, diagnostic
};

inline BranchDerivatives branch_x_derivatives(const TermBranch& br) {
  BranchDerivatives out;
  const double dy = grid_step(br.y_grid);
  out.deps_dx = d_dx(br.eps, grid_step(br.x_grid));
  const std::size_t nx = br.x_grid.size(), ny = br.y_grid.size();
  out.dw_dx.assign(nx, std::vector<double>(ny, 0.0));
  const double dx = grid_step(br.x_grid);
  for (std::size_t j = 0; j < ny; ++j) {
    out.dw_dx[0][j] = (-3.0 * br.w[0][j] + 4.0 * br.w[1][j] - br.w[2][j]) / (2.0 * dx);
    for (std::size_t i = 1; i + 1 < nx; ++i)
      out.dw_dx[i][j] = (br.w[i + 1][j] - br.w[i - 1][j]) / (2.0 * dx);
    out.dw_dx[nx - 1][j] =
        (3.0 * br.w[nx - 1][j] - 4.0 * br.w[nx - 2][j] + br.w[nx - 3][j]) / (2.0 * dx);
  }
  for (std::size_t i = 0; i < nx; ++i)
    out.max_self_overlap = std::max(out.max_self_overlap, std::abs(inner_y(br.w[i], out.dw_dx[i], dy)));
  return out;
}

// Automatic y-window for soft confinements: WKB turning-point estimate x1.5,
// grown until the tracked eigenfunctions' boundary tail is <= 1e-12 of peak.
inline std::vector<double> make_y_window(const ConfinementModel& model,
                                         const std::vector<double>& x_grid, std::size_t K,
                                         std::size_t n_nodes, double tail_tol = 1e-12) {
  if (model.rigid()) return linspace(model.y1, model.y2, n_nodes);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    // coarse minimum of v(x, .)
    double ymin = 0.0, vmin = std::numeric_limits<double>::infinity();
    for (int i = -200; i <= 200; ++i) {
      const double y = 0.05 * i;
      const double v = model.value(x, y);
      if (v < vmin) {
        vmin = v;
        ymin = y;
      }
    }
    // WKB action bisection for the K-th level energy estimate
    auto action = [&](double E) {
      const double r = 40.0;
      const int nq = 400;
      double s = 0.0;
      for (int i = 0; i < nq; ++i) {
        const double y = ymin - r + (2 * r) * (i + 0.5) / nq;
        const double g = E - model.value(x, y);
        if (g > 0) s += std::sqrt(2.0 * g) * (2 * r / nq);
      }
      return s / pi;
    };
    double Elo = vmin + 1e-12, Ehi = vmin + 1.0;
    while (action(Ehi) < double(K) + 0.5 && Ehi < vmin + 1e8) Ehi = vmin + (Ehi - vmin) * 2.0;
    for (int it = 0; it < 100; ++it) {
      const double Em = 0.5 * (Elo + Ehi);
      if (action(Em) < double(K) + 0.5)
        Elo = Em;
      else
        Ehi = Em;
    }
    const double E = Ehi;
    // outermost classical turning points at E
    double yl = ymin, yr = ymin;
    for (int i = 0; i <= 4000; ++i) {
      const double y = ymin - 40.0 + 80.0 * i / 4000.0;
      if (model.value(x, y) < E) {
        yl = std::min(yl, y);
        yr = std::max(yr, y);
      }
    }
    const double c = 0.5 * (yl + yr), r = 0.5 * (yr - yl);
    lo = std::min(lo, c - 1.5 * r);
    hi = std::max(hi, c + 1.5 * r);
  }

  for (int attempt = 0; attempt < 24; ++attempt) {
    auto grid = linspace(lo, hi, n_nodes);
    bool ok = true;
    try {
      for (double x : {x_grid.front(), x_grid[x_grid.size() / 2], x_grid.back()}) {
        auto lv = solve_transverse_at_x(model, x, grid, K);
        for (const auto& w : lv.vectors) {
          const double peak = max_abs(w);
          if (std::abs(w[1]) > tail_tol * peak || std::abs(w[w.size() - 2]) > tail_tol * peak) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
    } catch (const numerical_error&) {
      ok = false;
    }
    if (ok) return grid;
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    lo = c - 1.3 * r;
    hi = c + 1.3 * r;
  }
  throw numerical_error("WindowGrowthFailed", "could not find a y-window with decayed tails");
}

}  // namespace adiax
