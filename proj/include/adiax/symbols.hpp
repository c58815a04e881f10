#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "core.hpp"

namespace adiax {

// Entries of a symbol coefficient: a plain complex number, a transverse field
// sampled on the y-grid, or a tridiagonal operator acting on such fields.
enum class EntryKind { Scalar, Field, Op };

struct Entry {
  EntryKind kind = EntryKind::Scalar;
  cplx s{0.0, 0.0};
  std::vector<cplx> field;
  std::vector<cplx> diag, sub, sup;

  static Entry scalar(cplx v) {
    Entry e;
    e.kind = EntryKind::Scalar;
    e.s = v;
    return e;
  }
  static Entry make_field(std::vector<cplx> f) {
    Entry e;
    e.kind = EntryKind::Field;
    e.field = std::move(f);
    return e;
  }
  static Entry make_op(std::vector<cplx> d, std::vector<cplx> lo, std::vector<cplx> up) {
    Entry e;
    e.kind = EntryKind::Op;
    e.diag = std::move(d);
    e.sub = std::move(lo);
    e.sup = std::move(up);
    return e;
  }

  bool is_zero() const {
    switch (kind) {
      case EntryKind::Scalar:
        return s == cplx(0.0);
      case EntryKind::Field:
        return max_abs(field) == 0.0;
      case EntryKind::Op:
        return max_abs(diag) == 0.0 && max_abs(sub) == 0.0 && max_abs(sup) == 0.0;
    }
    return true;
  }

  double amplitude() const {
    switch (kind) {
      case EntryKind::Scalar:
        return std::abs(s);
      case EntryKind::Field:
        return max_abs(field);
      case EntryKind::Op:
        return std::max({max_abs(diag), max_abs(sub), max_abs(sup)});
    }
    return 0.0;
  }
};

inline Entry entry_scale(const Entry& a, cplx c) {
  Entry r = a;
  switch (r.kind) {
    case EntryKind::Scalar:
      r.s *= c;
      break;
    case EntryKind::Field:
      for (auto& v : r.field) v *= c;
      break;
    case EntryKind::Op:
      for (auto& v : r.diag) v *= c;
      for (auto& v : r.sub) v *= c;
      for (auto& v : r.sup) v *= c;
      break;
  }
  return r;
}

inline Entry entry_add(const Entry& a, const Entry& b) {
  if (a.is_zero() && a.kind == EntryKind::Scalar) return b;
  if (b.is_zero() && b.kind == EntryKind::Scalar) return a;
  if (a.kind == EntryKind::Scalar && b.kind != EntryKind::Scalar) {
    Entry r = b;
    if (r.kind == EntryKind::Field)
      for (auto& v : r.field) v += a.s;
    else
      for (auto& v : r.diag) v += a.s;
    return r;
  }
  if (b.kind == EntryKind::Scalar && a.kind != EntryKind::Scalar) return entry_add(b, a);
  if (a.kind != b.kind) throw validation_error("entry_add: incompatible kinds");
  Entry r = a;
  switch (a.kind) {
    case EntryKind::Scalar:
      r.s += b.s;
      break;
    case EntryKind::Field:
      if (r.field.size() != b.field.size()) throw validation_error("entry_add: field size mismatch");
      for (std::size_t i = 0; i < r.field.size(); ++i) r.field[i] += b.field[i];
      break;
    case EntryKind::Op:
      if (r.diag.size() != b.diag.size()) throw validation_error("entry_add: op size mismatch");
      for (std::size_t i = 0; i < r.diag.size(); ++i) r.diag[i] += b.diag[i];
      for (std::size_t i = 0; i < r.sub.size(); ++i) r.sub[i] += b.sub[i];
      for (std::size_t i = 0; i < r.sup.size(); ++i) r.sup[i] += b.sup[i];
      break;
  }
  return r;
}

inline std::vector<cplx> op_apply(const Entry& op, const std::vector<cplx>& f) {
  const std::size_t n = f.size();
  if (op.diag.size() != n) throw validation_error("op_apply size mismatch");
  std::vector<cplx> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx v = op.diag[i] * f[i];
    if (i > 0) v += op.sub[i - 1] * f[i - 1];
    if (i + 1 < n) v += op.sup[i] * f[i + 1];
    g[i] = v;
  }
  return g;
}

inline Entry entry_mul(const Entry& a, const Entry& b) {
  if (a.kind == EntryKind::Scalar && b.kind == EntryKind::Scalar) return Entry::scalar(a.s * b.s);
  if (a.kind == EntryKind::Scalar) return entry_scale(b, a.s);
  if (b.kind == EntryKind::Scalar) return entry_scale(a, b.s);
  if (a.kind == EntryKind::Op && b.kind == EntryKind::Field)
    return Entry::make_field(op_apply(a, b.field));
  throw validation_error("entry_mul: unsupported kind combination");
}

// One mu-order of a symbol: coefficients of p^m at every x-node.
// powers[m][ix] is the Entry multiplying p^m at x_grid[ix].
struct PSymbol {
  std::vector<std::vector<Entry>> powers;

  int degree() const { return int(powers.size()) - 1; }
};

struct MuSymbol {
  std::vector<double> x_grid;
  std::vector<PSymbol> orders;

  int max_order() const { return int(orders.size()) - 1; }
  int p_degree() const {
    int d = -1;
    for (const auto& o : orders) d = std::max(d, o.degree());
    return d;
  }
};

inline MuSymbol make_identity(const std::vector<double>& x_grid) {
  MuSymbol s;
  s.x_grid = x_grid;
  s.orders.resize(1);
  s.orders[0].powers.resize(1);
  s.orders[0].powers[0].assign(x_grid.size(), Entry::scalar(1.0));
  return s;
}

// Scalar symbol from per-order, per-power coefficient samples c[j][m][ix].
inline MuSymbol make_scalar_symbol(const std::vector<double>& x_grid,
                                   const std::vector<std::vector<std::vector<cplx>>>& c) {
  MuSymbol s;
  s.x_grid = x_grid;
  s.orders.resize(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    s.orders[j].powers.resize(c[j].size());
    for (std::size_t m = 0; m < c[j].size(); ++m) {
      if (c[j][m].size() != x_grid.size())
        throw validation_error("make_scalar_symbol sample count mismatch");
      s.orders[j].powers[m].reserve(x_grid.size());
      for (const auto& v : c[j][m]) s.orders[j].powers[m].push_back(Entry::scalar(v));
    }
  }
  return s;
}

inline MuSymbol symbol_add(const MuSymbol& a, const MuSymbol& b) {
  MuSymbol r;
  r.x_grid = a.x_grid;
  const std::size_t jo = std::max(a.orders.size(), b.orders.size());
  r.orders.resize(jo);
  for (std::size_t j = 0; j < jo; ++j) {
    const PSymbol* pa = (j < a.orders.size()) ? &a.orders[j] : nullptr;
    const PSymbol* pb = (j < b.orders.size()) ? &b.orders[j] : nullptr;
    const std::size_t np = std::max(pa ? pa->powers.size() : 0, pb ? pb->powers.size() : 0);
    r.orders[j].powers.resize(np);
    for (std::size_t m = 0; m < np; ++m) {
      r.orders[j].powers[m].assign(a.x_grid.size(), Entry::scalar(0.0));
      for (std::size_t ix = 0; ix < a.x_grid.size(); ++ix) {
        Entry e = Entry::scalar(0.0);
        if (pa && m < pa->powers.size()) e = entry_add(e, pa->powers[m][ix]);
        if (pb && m < pb->powers.size()) e = entry_add(e, pb->powers[m][ix]);
        r.orders[j].powers[m][ix] = e;
      }
    }
  }
  return r;
}

inline MuSymbol symbol_scale(const MuSymbol& a, cplx c) {
  MuSymbol r = a;
  for (auto& o : r.orders)
    for (auto& pw : o.powers)
      for (auto& e : pw) e = entry_scale(e, c);
  return r;
}

namespace detail {

// d/dx across the x-nodes of one power row, second order (one-sided at ends).
inline std::vector<Entry> entry_row_ddx(const std::vector<Entry>& row, double dx) {
  const std::size_t n = row.size();
  if (n < 3) throw validation_error("entry_row_ddx needs >= 3 x-nodes");
  auto comb = [&](const Entry& f0, const Entry& f1, const Entry& f2, double c0, double c1,
                  double c2) {
    Entry r = entry_add(entry_add(entry_scale(f0, c0 / (2.0 * dx)), entry_scale(f1, c1 / (2.0 * dx))),
                        entry_scale(f2, c2 / (2.0 * dx)));
    return r;
  };
  std::vector<Entry> g(n);
  g[0] = comb(row[0], row[1], row[2], -3.0, 4.0, -1.0);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = comb(row[i - 1], row[i], row[i + 1], -1.0, 0.0, 1.0);
  g[n - 1] = comb(row[n - 3], row[n - 2], row[n - 1], 1.0, -4.0, 3.0);
  return g;
}

inline PSymbol psymbol_ddx(const PSymbol& a, double dx) {
  PSymbol r;
  r.powers.resize(a.powers.size());
  for (std::size_t m = 0; m < a.powers.size(); ++m) r.powers[m] = entry_row_ddx(a.powers[m], dx);
  return r;
}

// Exact d/dp on the p-polynomial structure.
inline PSymbol psymbol_ddp(const PSymbol& a) {
  PSymbol r;
  if (a.powers.size() <= 1) {
    r.powers.resize(a.powers.empty() ? 0 : 1);
    if (!r.powers.empty())
      r.powers[0].assign(a.powers[0].size(), Entry::scalar(0.0));
    return r;
  }
  r.powers.resize(a.powers.size() - 1);
  for (std::size_t m = 1; m < a.powers.size(); ++m) {
    r.powers[m - 1].resize(a.powers[m].size());
    for (std::size_t ix = 0; ix < a.powers[m].size(); ++ix)
      r.powers[m - 1][ix] = entry_scale(a.powers[m][ix], double(m));
  }
  return r;
}

inline PSymbol psymbol_mul(const PSymbol& a, const PSymbol& b, std::size_t nx) {
  PSymbol r;
  if (a.powers.empty() || b.powers.empty()) return r;
  r.powers.resize(a.powers.size() + b.powers.size() - 1);
  for (auto& pw : r.powers) pw.assign(nx, Entry::scalar(0.0));
  for (std::size_t ma = 0; ma < a.powers.size(); ++ma)
    for (std::size_t mb = 0; mb < b.powers.size(); ++mb)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const Entry& ea = a.powers[ma][ix];
        const Entry& eb = b.powers[mb][ix];
        if (ea.is_zero() || eb.is_zero()) continue;
        r.powers[ma + mb][ix] = entry_add(r.powers[ma + mb][ix], entry_mul(ea, eb));
      }
  return r;
}

}  // namespace detail

// smb(A o B): order-j term is sum over a+b+k=j of ((-i)^k / k!) d_p^k A_a . d_x^k B_b.
inline MuSymbol compose(const MuSymbol& A, const MuSymbol& B, int trunc_order = -1) {
  if (A.x_grid.size() != B.x_grid.size())
    throw validation_error("compose: x-grid size mismatch");
  const double dx = grid_step(A.x_grid);
  const std::size_t nx = A.x_grid.size();
  const int n_default = A.max_order() + B.max_order() + std::max(A.p_degree(), 0);
  const int N = (trunc_order >= 0) ? trunc_order : n_default;

  // d_p^k A_a, built incrementally in k.
  std::vector<std::vector<PSymbol>> dpA(A.orders.size());
  for (std::size_t a = 0; a < A.orders.size(); ++a) {
    dpA[a].push_back(A.orders[a]);
    for (int k = 1; k <= N; ++k) dpA[a].push_back(detail::psymbol_ddp(dpA[a].back()));
  }
  std::vector<std::vector<PSymbol>> dxB(B.orders.size());
  for (std::size_t b = 0; b < B.orders.size(); ++b) {
    dxB[b].push_back(B.orders[b]);
    for (int k = 1; k <= N; ++k) dxB[b].push_back(detail::psymbol_ddx(dxB[b].back(), dx));
  }

  MuSymbol R;
  R.x_grid = A.x_grid;
  R.orders.resize(N + 1);
  for (int j = 0; j <= N; ++j) {
    PSymbol acc;
    static const cplx mi_pow[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
    double kfact = 1.0;
    cplx mik(1.0, 0.0);  // (-i)^k / k!
    for (int k = 0; k <= j; ++k) {
      if (k > 0) {
        kfact *= k;
        mik = mi_pow[k % 4] / kfact;
      }
      for (int a = 0; a + k <= j && a < int(A.orders.size()); ++a) {
        const int b = j - k - a;
        if (b < 0 || b >= int(B.orders.size())) continue;
        PSymbol term = detail::psymbol_mul(dpA[a][k], dxB[b][k], nx);
        for (auto& pw : term.powers)
          for (auto& e : pw) e = entry_scale(e, (k > 0) ? mik : cplx(1.0));
        // accumulate
        if (acc.powers.size() < term.powers.size()) {
          const std::size_t old = acc.powers.size();
          acc.powers.resize(term.powers.size());
          for (std::size_t m = old; m < acc.powers.size(); ++m)
            acc.powers[m].assign(nx, Entry::scalar(0.0));
        }
        for (std::size_t m = 0; m < term.powers.size(); ++m)
          for (std::size_t ix = 0; ix < nx; ++ix)
            acc.powers[m][ix] = entry_add(acc.powers[m][ix], term.powers[m][ix]);
      }
    }
    if (acc.powers.empty()) {
      acc.powers.resize(1);
      acc.powers[0].assign(nx, Entry::scalar(0.0));
    }
    R.orders[j] = std::move(acc);
  }
  return R;
}

// Max amplitude of the order-j coefficient over powers, x-nodes and components.
inline double order_norm(const MuSymbol& s, int j) {
  if (j < 0 || j > s.max_order()) return 0.0;
  double m = 0.0;
  for (const auto& pw : s.orders[j].powers)
    for (const auto& e : pw) m = std::max(m, e.amplitude());
  return m;
}

// Residual orders of compose(chi, L) + i mu chi_t - compose(H, chi).
// chi_t enters shifted by one order (the i mu prefactor).
inline MuSymbol reduction_residual(const MuSymbol& chi, const MuSymbol& L, const MuSymbol& H,
                                   const MuSymbol* chi_t = nullptr, int trunc_order = 2) {
  MuSymbol lhs = compose(chi, L, trunc_order);
  MuSymbol rhs = compose(H, chi, trunc_order);
  MuSymbol res = symbol_add(lhs, symbol_scale(rhs, cplx(-1.0)));
  if (chi_t) {
    MuSymbol shifted;
    shifted.x_grid = chi_t->x_grid;
    shifted.orders.resize(chi_t->orders.size() + 1);
    shifted.orders[0].powers.resize(1);
    shifted.orders[0].powers[0].assign(chi_t->x_grid.size(), Entry::scalar(0.0));
    for (std::size_t j = 0; j < chi_t->orders.size(); ++j) shifted.orders[j + 1] = chi_t->orders[j];
    res = symbol_add(res, symbol_scale(shifted, cplx(0.0, 1.0)));
  }
  if (int(res.orders.size()) > trunc_order + 1) res.orders.resize(trunc_order + 1);
  return res;
}

// Evaluate a symbol at numeric (p, mu): per-x entries summed across orders and powers.
inline std::vector<Entry> eval_symbol(const MuSymbol& s, double p, double mu) {
  std::vector<Entry> out(s.x_grid.size(), Entry::scalar(0.0));
  double muj = 1.0;
  for (int j = 0; j <= s.max_order(); ++j, muj *= mu) {
    double pm = 1.0;
    for (std::size_t m = 0; m < s.orders[j].powers.size(); ++m, pm *= p)
      for (std::size_t ix = 0; ix < out.size(); ++ix)
        out[ix] = entry_add(out[ix], entry_scale(s.orders[j].powers[m][ix], muj * pm));
  }
  return out;
}

}  // namespace adiax
