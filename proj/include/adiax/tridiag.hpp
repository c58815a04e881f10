#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "core.hpp"

namespace adiax {

// Pivoted LU solve of a tridiagonal system (sub a, diag b, super c).
// Near-singular pivots are replaced by a tiny safe value (inverse-iteration use).
template <class T>
std::vector<T> solve_tridiag_pivoted(std::vector<T> a, std::vector<T> b, std::vector<T> c,
                                     std::vector<T> rhs) {
  const std::size_t n = b.size();
  if (a.size() != n - 1 || c.size() != n - 1 || rhs.size() != n)
    throw validation_error("solve_tridiag_pivoted size mismatch");
  std::vector<T> c2(n >= 2 ? n - 2 : 0, T(0));
  double scale = 0.0;
  for (const auto& v : b) scale = std::max(scale, std::abs(v));
  for (const auto& v : a) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * std::numeric_limits<double>::min() * 1e4 +
                      std::numeric_limits<double>::denorm_min();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (std::abs(a[k]) > std::abs(b[k])) {
      std::swap(b[k], a[k]);
      std::swap(c[k], b[k + 1]);
      if (k + 2 < n) std::swap(c2[k], c[k + 1]);
      std::swap(rhs[k], rhs[k + 1]);
    }
    if (std::abs(b[k]) < tiny) b[k] = T(tiny);
    const T m = a[k] / b[k];
    b[k + 1] -= m * c[k];
    if (k + 2 < n) c[k + 1] -= m * c2[k];
    rhs[k + 1] -= m * rhs[k];
  }
  if (std::abs(b[n - 1]) < tiny) b[n - 1] = T(tiny);
  std::vector<T> x(n);
  x[n - 1] = rhs[n - 1] / b[n - 1];
  if (n >= 2) x[n - 2] = (rhs[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
  for (std::size_t k = n; k-- > 2;) {
    const std::size_t i = k - 2;
    T v = rhs[i] - c[i] * x[i + 1];
    if (i + 2 < n) v -= c2[i] * x[i + 2];
    x[i] = v / b[i];
  }
  return x;
}

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  const std::size_t n = d.size();
  int count = 0;
  double q = d[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    double denom = q;
    if (denom == 0.0) denom = std::numeric_limits<double>::denorm_min();
    q = d[i] - x - e[i - 1] * e[i - 1] / denom;
    if (q < 0) ++count;
  }
  return count;
}

// Ascending eigenvalues with indices [i0, i1] (0-based) by bisection.
inline std::vector<double> tridiag_eigenvalues(const std::vector<double>& d,
                                               const std::vector<double>& e, std::size_t i0,
                                               std::size_t i1) {
  const std::size_t n = d.size();
  if (i1 >= n || i0 > i1) throw validation_error("tridiag_eigenvalues bad index range");
  double lo = d[0], hi = d[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double span = hi - lo + 1.0;
  lo -= 1e-12 * span;
  hi += 1e-12 * span;
  std::vector<double> vals(i1 - i0 + 1);
  for (std::size_t idx = i0; idx <= i1; ++idx) {
    double a = lo, b = hi;
    while (b - a > 1e-15 * std::max(std::abs(a) + std::abs(b), 1.0)) {
      const double m = 0.5 * (a + b);
      if (m == a || m == b) break;
      if (sturm_count(d, e, m) > int(idx))
        b = m;
      else
        a = m;
    }
    vals[idx - i0] = 0.5 * (a + b);
  }
  return vals;
}

namespace detail {
inline double lcg_unit(std::uint64_t& s) {
  s = s * 6364136223846793005ULL + 1442695040888963407ULL;
  return double((s >> 11) & ((1ULL << 53) - 1)) / double(1ULL << 53) - 0.5;
}
}  // namespace detail

struct TridiagEigs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // unit 2-norm
};

// Lowest (i1+1 - i0) eigenpairs of the symmetric tridiagonal (d, e) by
// bisection + inverse iteration, with orthogonalization inside clusters.
inline TridiagEigs tridiag_eigenpairs(const std::vector<double>& d, const std::vector<double>& e,
                                      std::size_t i0, std::size_t i1) {
  const std::size_t n = d.size();
  TridiagEigs out;
  out.values = tridiag_eigenvalues(d, e, i0, i1);
  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  for (double v : e) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1.0);
  const double cluster_tol = 1e-8 * scale;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double lam = out.values[k];
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL ^ (k + 0x1234);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = detail::lcg_unit(seed);
    std::vector<double> sub(e), sup(e), diag(n);
    double resid = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12 && resid > 1e-13 * scale; ++it) {
      for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - lam;
      v = solve_tridiag_pivoted(sub, diag, sup, v);
      // near-singular pivots can blow entries up to ~1/tiny; rescale by the
      // largest magnitude so the squared norm below cannot overflow to inf
      double mx = 0.0;
      for (double x : v) mx = std::max(mx, std::abs(x));
      if (!(mx > 0.0) || !std::isfinite(mx)) {
        seed ^= 0xabcdef;
        for (std::size_t i = 0; i < n; ++i) v[i] = detail::lcg_unit(seed);
        continue;
      }
      for (double& x : v) x /= mx;
      for (std::size_t j = 0; j < k; ++j) {
        if (std::abs(out.values[j] - lam) < cluster_tol) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += out.vectors[j][i] * v[i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= dot * out.vectors[j][i];
        }
      }
      double nr = 0.0;
      for (double x : v) nr += x * x;
      nr = std::sqrt(nr);
      if (nr == 0.0) {
        seed ^= 0xabcdef;
        for (std::size_t i = 0; i < n; ++i) v[i] = detail::lcg_unit(seed);
        continue;
      }
      for (double& x : v) x /= nr;
      resid = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double r = (d[i] - lam) * v[i];
        if (i > 0) r += e[i - 1] * v[i - 1];
        if (i + 1 < n) r += e[i] * v[i + 1];
        resid = std::max(resid, std::abs(r));
      }
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

struct HermTridiagEigs {
  std::vector<double> values;
  std::vector<std::vector<cplx>> vectors;  // unit 2-norm
};

// Hermitian tridiagonal (real diag d, complex sub e): phase similarity to the
// real symmetric case, phases restored on the eigenvectors.
inline HermTridiagEigs herm_tridiag_eigenpairs(const std::vector<double>& d,
                                               const std::vector<cplx>& e, std::size_t i0,
                                               std::size_t i1) {
  const std::size_t n = d.size();
  std::vector<double> emod(n >= 1 ? n - 1 : 0);
  std::vector<cplx> delta(n);
  delta[0] = 1.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    emod[k] = std::abs(e[k]);
    delta[k + 1] = (emod[k] > 0.0) ? delta[k] * std::conj(e[k]) / emod[k] : delta[k];
  }
  auto re = tridiag_eigenpairs(d, emod, i0, i1);
  HermTridiagEigs out;
  out.values = re.values;
  out.vectors.resize(re.vectors.size());
  for (std::size_t k = 0; k < re.vectors.size(); ++k) {
    out.vectors[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) out.vectors[k][i] = std::conj(delta[i]) * re.vectors[k][i];
  }
  return out;
}

}  // namespace adiax
