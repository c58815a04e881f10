#include <catch2/catch_amalgamated.hpp>

#include <adiax/reference2d.hpp>
#include <adiax/transverse.hpp>
#include <adiax/tridiag.hpp>

#include <random>

using namespace adiax;

namespace {

cplx inner2d(const Wavefunction2D& a, const Wavefunction2D& b) {
  const std::size_t nx = a.grid.x.size(), ny = a.grid.y.size();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double wq = ((i == 0 || i + 1 == nx) ? 0.5 : 1.0) *
                        ((j == 0 || j + 1 == ny) ? 0.5 : 1.0);
      acc += wq * std::conj(a.psi[i * ny + j]) * b.psi[i * ny + j];
    }
  return acc * a.grid.dx() * a.grid.dy();
}

Wavefunction2D fill_interior(const Rect2DGrid& g,
                             const std::function<cplx(double, double)>& f) {
  Wavefunction2D w;
  w.grid = g;
  const std::size_t nx = g.x.size(), ny = g.y.size();
  w.psi.assign(nx * ny, 0.0);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < ny; ++j) w.psi[i * ny + j] = f(g.x[i], g.y[j]);
  return w;
}

}  // namespace

TEST_CASE("the box ground state matches the discrete closed form", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(0.0, 1.0, 31);
  g.y = linspace(0.0, 1.0, 27);
  const double mu = 0.4;
  auto op = assemble_2d(mu, [](double, double) { return 0.0; }, g);
  auto eig = eigs_2d(op, 1, 1e-10, 300, 2);

  const double dx = g.dx(), dy = g.dy();
  const double closed = mu * mu * (1.0 - std::cos(pi * dx)) / (dx * dx) +
                        (1.0 - std::cos(pi * dy)) / (dy * dy);
  REQUIRE(std::abs(eig.values[0] - closed) < 1e-7);

  const double continuum = 0.5 * pi * pi * (mu * mu + 1.0);
  REQUIRE(std::abs(eig.values[0] - continuum) < 0.01 * continuum);
}

TEST_CASE("the discretized operator is symmetric", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(0.0, 2.0, 21);
  g.y = linspace(-1.0, 1.0, 19);
  auto op = assemble_2d(0.7, [](double x, double y) { return std::cos(x) * y * y; }, g);

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t n = op.dim();
  std::vector<cplx> u(n), v(n), au(n), av(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = cplx(uni(rng), uni(rng));
    v[i] = cplx(uni(rng), uni(rng));
  }
  op.apply(u, au);
  op.apply(v, av);
  cplx uav = 0.0, auv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    uav += std::conj(u[i]) * av[i];
    auv += std::conj(au[i]) * v[i];
  }
  REQUIRE(std::abs(uav - auv) < 1e-10 * std::abs(uav));
}

TEST_CASE("separable potentials give sums of tridiagonal eigenvalues", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(0.0, 2.0, 41);
  g.y = linspace(-3.0, 3.0, 33);
  const double mu = 0.3;
  auto v1 = [](double x) { return std::cos(2.0 * x) + 0.3 * x; };
  auto v2 = [](double y) { return 0.5 * y * y; };
  auto op = assemble_2d(mu, [&](double x, double y) { return v1(x) + v2(y); }, g);

  const double dx = g.dx(), dy = g.dy();
  std::vector<double> dxv(g.nix()), dyv(g.niy());
  for (std::size_t i = 0; i < g.nix(); ++i) dxv[i] = mu * mu / (dx * dx) + v1(g.x[i + 1]);
  for (std::size_t j = 0; j < g.niy(); ++j) dyv[j] = 1.0 / (dy * dy) + v2(g.y[j + 1]);
  std::vector<cplx> ex(g.nix() - 1, cplx(-0.5 * mu * mu / (dx * dx), 0.0));
  std::vector<cplx> ey(g.niy() - 1, cplx(-0.5 / (dy * dy), 0.0));
  auto lx = herm_tridiag_eigenpairs(dxv, ex, 0, 7).values;
  auto ly = herm_tridiag_eigenpairs(dyv, ey, 0, 7).values;
  std::vector<double> sums;
  for (double a : lx)
    for (double b : ly) sums.push_back(a + b);
  std::sort(sums.begin(), sums.end());

  auto eig = eigs_2d(op, 5, 1e-9, 300, 2);
  for (std::size_t k = 0; k < 5; ++k) REQUIRE(std::abs(eig.values[k] - sums[k]) < 1e-10);
}

TEST_CASE("computed eigenpairs are orthonormal with small residuals", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(-6.0, 6.0, 41);
  g.y = linspace(-6.0, 6.0, 41);
  auto op = assemble_2d(0.5, [](double x, double y) { return 0.5 * (x * x + y * y); }, g);
  auto eig = eigs_2d(op, 4, 1e-9, 300, 2);

  REQUIRE(eig.values.size() == 4);
  for (std::size_t a = 0; a < 4; ++a) {
    REQUIRE(eig.residuals[a] < 1e-8);
    for (std::size_t b = 0; b <= a; ++b) {
      const cplx ip = inner2d(eig.vectors[a], eig.vectors[b]);
      const double want = (a == b) ? 1.0 : 0.0;
      REQUIRE(std::abs(ip - want) < 1e-8);
    }
  }
  REQUIRE(eig.values[0] < eig.values[1]);
}

TEST_CASE("stationary states keep unit fidelity under time stepping", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(-6.0, 6.0, 41);
  g.y = linspace(-6.0, 6.0, 41);
  auto op = assemble_2d(0.5, [](double x, double y) { return 0.5 * (x * x + y * y); }, g);
  auto eig = eigs_2d(op, 1, 1e-10, 300, 2);

  auto out = evolve_cn(eig.vectors[0], op, 1e-3, 100, 0, 1e-12, 2);
  const auto& fin = out.snapshots.back();
  const double fid =
      std::abs(inner2d(eig.vectors[0], fin)) / (eig.vectors[0].norm() * fin.norm());
  REQUIRE(fid >= 1.0 - 1e-8);
  REQUIRE(std::abs(fin.norm() - 1.0) < 1e-9);
}

TEST_CASE("conjugation reverses the time stepping", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(-6.0, 6.0, 41);
  g.y = linspace(-6.0, 6.0, 41);
  auto op = assemble_2d(0.5, [](double x, double y) { return 0.5 * (x * x + y * y); }, g);
  auto psi0 = fill_interior(g, [](double x, double y) {
    return std::exp(cplx(0.0, 2.0 * x - y)) *
           std::exp(-0.5 * ((x - 1.0) * (x - 1.0) + y * y));
  });

  auto fwd = evolve_cn(psi0, op, 2e-3, 50, 0, 1e-13, 2);
  Wavefunction2D mirror = fwd.snapshots.back();
  for (auto& z : mirror.psi) z = std::conj(z);
  auto back = evolve_cn(mirror, op, 2e-3, 50, 0, 1e-13, 2);
  Wavefunction2D rewound = back.snapshots.back();
  for (auto& z : rewound.psi) z = std::conj(z);

  double worst = 0.0;
  for (std::size_t k = 0; k < psi0.psi.size(); ++k)
    worst = std::max(worst, std::abs(rewound.psi[k] - psi0.psi[k]));
  REQUIRE(worst < 1e-8);
}

TEST_CASE("a free packet drifts at its group velocity", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(0.0, 3.0, 151);
  g.y = linspace(-5.0, 5.0, 101);
  const double mu = 0.1, k0 = 8.0, x0 = 1.0, sig = 0.25;
  auto op = assemble_2d(mu, [](double, double y) { return 0.5 * y * y; }, g);
  auto psi0 = fill_interior(g, [=](double x, double y) {
    return std::exp(cplx(0.0, k0 * x)) *
           std::exp(-0.25 * (x - x0) * (x - x0) / (sig * sig) - 0.5 * y * y);
  });

  auto centroid = [&](const Wavefunction2D& w) {
    double num = 0.0, den = 0.0;
    const std::size_t ny = g.y.size();
    for (std::size_t i = 0; i < g.x.size(); ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double p = std::norm(w.psi[i * ny + j]);
        num += g.x[i] * p;
        den += p;
      }
    return num / den;
  };

  const double t_final = 0.5;
  auto out = evolve_cn(psi0, op, 1e-3, 500, 0, 1e-12, 2);
  const double drift = centroid(out.snapshots.back()) - centroid(out.snapshots.front());
  const double want = mu * k0 * t_final;
  REQUIRE(std::abs(drift - want) < 0.02 * want);
}

TEST_CASE("mode projection inverts mode composition", "[reference2d]") {
  Rect2DGrid g;
  g.x = linspace(0.0, 2.0, 41);
  g.y = linspace(0.0, 1.0, 41);
  auto br = track_branches(ConfinementModel::rigid_wall(0.0, 1.0), g.x, g.y, 5);

  std::vector<cplx> f(g.x.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::exp(cplx(0.0, 2.0 * g.x[i])) * std::sin(0.5 * pi * g.x[i]);

  auto pure = compose_mode(g, br[2], f);
  auto coef = project_modes(pure, br);
  for (std::size_t k = 0; k < br.size(); ++k)
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const cplx want = (k == 2) ? f[i] : cplx(0.0);
      REQUIRE(std::abs(coef[k][i] - want) < 1e-10);
    }

  // a combination of tracked modes is reproduced exactly from its coefficients
  Wavefunction2D mix;
  mix.grid = g;
  mix.psi.assign(g.x.size() * g.y.size(), 0.0);
  const std::vector<cplx> amps = {cplx(0.9, 0.1), cplx(-0.4, 0.3), cplx(0.0, 0.0),
                                  cplx(0.2, -0.7), cplx(0.1, 0.0)};
  for (std::size_t k = 0; k < br.size(); ++k) {
    std::vector<cplx> fk(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fk[i] = amps[k] * f[i];
    auto part = compose_mode(g, br[k], fk);
    for (std::size_t q = 0; q < mix.psi.size(); ++q) mix.psi[q] += part.psi[q];
  }
  auto mixed = project_modes(mix, br);

  const std::size_t ny = g.y.size();
  const double dy = g.dy();
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    // fiberwise projections never exceed the fiber mass
    double fiber = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      const double wq = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
      fiber += wq * std::norm(mix.psi[i * ny + j]) * dy;
    }
    double caught = 0.0;
    for (std::size_t k = 0; k < br.size(); ++k) {
      caught += std::norm(mixed[k][i]);
      REQUIRE(std::abs(mixed[k][i] - amps[k] * f[i]) < 1e-8);
    }
    REQUIRE(caught <= fiber + 1e-10);
  }
}
