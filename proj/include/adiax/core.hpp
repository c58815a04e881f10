#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adiax {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
  std::string name;
  numerical_error(std::string n, const std::string& msg)
      : std::runtime_error(n + ": " + msg), name(std::move(n)) {}
};

struct caustic_encountered : numerical_error {
  explicit caustic_encountered(const std::string& msg) : numerical_error("CausticEncountered", msg) {}
};
struct degenerate_term : numerical_error {
  explicit degenerate_term(const std::string& msg) : numerical_error("DegenerateTerm", msg) {}
};
struct sticking_bands : numerical_error {
  explicit sticking_bands(const std::string& msg) : numerical_error("StickingBands", msg) {}
};
struct no_solution : numerical_error {
  explicit no_solution(const std::string& msg) : numerical_error("NoSolution", msg) {}
};
struct multi_well : numerical_error {
  explicit multi_well(const std::string& msg) : numerical_error("MultiWell", msg) {}
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw validation_error("linspace needs at least 2 nodes");
  std::vector<double> g(n);
  const double dx = (b - a) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + double(i) * dx;
  g.back() = b;
  return g;
}

inline double grid_step(const std::vector<double>& g) {
  if (g.size() < 2) throw validation_error("grid too small");
  return (g.back() - g.front()) / double(g.size() - 1);
}

template <class T>
T trapezoid(const std::vector<T>& f, double dx) {
  if (f.size() < 2) throw validation_error("trapezoid needs at least 2 nodes");
  T s = (f.front() + f.back()) / 2.0;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * dx;
}

// Conjugate-linear in the first slot.
inline cplx inner_y(const std::vector<cplx>& a, const std::vector<cplx>& b, double dy) {
  if (a.size() != b.size()) throw validation_error("inner_y size mismatch");
  std::vector<cplx> f(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) f[i] = std::conj(a[i]) * b[i];
  return trapezoid(f, dy);
}

inline double inner_y(const std::vector<double>& a, const std::vector<double>& b, double dy) {
  if (a.size() != b.size()) throw validation_error("inner_y size mismatch");
  std::vector<double> f(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) f[i] = a[i] * b[i];
  return trapezoid(f, dy);
}

template <class T>
double norm_y(const std::vector<T>& a, double dy) {
  std::vector<double> f(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) f[i] = std::norm(cplx(a[i]));
  return std::sqrt(trapezoid(f, dy));
}

template <class T>
double max_abs(const std::vector<T>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

// Least-squares polynomial fit f(s) ~ sum c_k s^k, degree deg.
inline std::vector<double> polyfit(const std::vector<double>& s, const std::vector<double>& f, int deg) {
  const int m = deg + 1;
  std::vector<double> A(m * m, 0.0), rhs(m, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double pw[16];
    pw[0] = 1.0;
    for (int k = 1; k < 2 * m - 1 + 1; ++k) pw[k] = pw[k - 1] * s[i];
    for (int r = 0; r < m; ++r) {
      rhs[r] += pw[r] * f[i];
      for (int c = 0; c < m; ++c) A[r * m + c] += pw[r + c];
    }
  }
  // Gaussian elimination with partial pivoting.
  std::vector<int> piv(m);
  std::iota(piv.begin(), piv.end(), 0);
  for (int k = 0; k < m; ++k) {
    int p = k;
    for (int r = k + 1; r < m; ++r)
      if (std::abs(A[r * m + k]) > std::abs(A[p * m + k])) p = r;
    if (p != k) {
      for (int c = 0; c < m; ++c) std::swap(A[k * m + c], A[p * m + c]);
      std::swap(rhs[k], rhs[p]);
    }
    if (A[k * m + k] == 0.0) throw numerical_error("SingularFit", "polyfit normal equations singular");
    for (int r = k + 1; r < m; ++r) {
      const double f2 = A[r * m + k] / A[k * m + k];
      for (int c = k; c < m; ++c) A[r * m + c] -= f2 * A[k * m + c];
      rhs[r] -= f2 * rhs[k];
    }
  }
  std::vector<double> c(m);
  for (int k = m - 1; k >= 0; --k) {
    double v = rhs[k];
    for (int c2 = k + 1; c2 < m; ++c2) v -= A[k * m + c2] * c[c2];
    c[k] = v / A[k * m + k];
  }
  return c;
}

// Slope of log(f) vs log(s) by least squares.
inline double loglog_slope(const std::vector<double>& s, const std::vector<double>& f) {
  std::vector<double> ls(s.size()), lf(f.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    ls[i] = std::log(s[i]);
    lf[i] = std::log(f[i]);
  }
  auto c = polyfit(ls, lf, 1);
  return c[1];
}

inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const unsigned t = std::min<unsigned>(threads, unsigned(n));
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr err;
  std::mutex err_mu;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += t) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Second-order first-derivative matrix action on samples (central; one-sided at ends).
template <class T>
std::vector<T> d_dx(const std::vector<T>& f, double dx) {
  const std::size_t n = f.size();
  if (n < 3) throw validation_error("d_dx needs at least 3 nodes");
  std::vector<T> g(n);
  g[0] = (f[2] * (-1.0) + f[1] * 4.0 + f[0] * (-3.0)) / (2.0 * dx);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
  g[n - 1] = (f[n - 1] * 3.0 + f[n - 2] * (-4.0) + f[n - 3] * 1.0) / (2.0 * dx);
  return g;
}

}  // namespace adiax
