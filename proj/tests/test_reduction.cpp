#include <catch2/catch_amalgamated.hpp>

#include <adiax/bloch.hpp>
#include <adiax/reduction.hpp>
#include <adiax/symbols.hpp>

using namespace adiax;

TEST_CASE("effective hamiltonian assembles branch plus external potential", "[reduction]") {
  auto xg = linspace(-2.0, 2.0, 41);
  auto yg = linspace(0.0, 1.0, 401);
  auto br = track_branches(ConfinementModel::rigid_wall(0.0, 1.0), xg, yg, 1);

  auto flat = effective_hamiltonian(br[0], nullptr);
  // branch level carries the 3-point stencil defect pi^4 dy^2 / 24
  const double dy = grid_step(yg);
  const double defect = std::pow(pi, 4) * dy * dy / 24.0;
  for (double p : {-1.0, 0.0, 0.5})
    for (double x : {-1.5, 0.0, 1.0})
      REQUIRE(std::abs(flat.Heff(p, x) - (0.5 * p * p + pi * pi / 2.0)) < 1.05 * defect);

  auto shifted = effective_hamiltonian(br[0], [](double x) { return std::cos(x); });
  // additivity is exact on grid nodes, where no interpolation is involved
  for (double x : {-1.5, 0.3, 1.0})
    REQUIRE(std::abs(shifted.Heff(0.3, x) - flat.Heff(0.3, x) - std::cos(x)) < 1e-12);
}

TEST_CASE("first correction vanishes for a straight time-independent waveguide", "[reduction]") {
  auto xg = linspace(-2.0, 2.0, 41);
  auto yg = linspace(-8.0, 8.0, 201);
  auto model = ConfinementModel::harmonic([](double x) { return 1.0 + 0.2 * std::exp(-x * x); });
  auto br = track_branches(model, xg, yg, 1);
  auto eff = effective_hamiltonian(br[0], nullptr);
  auto fam = make_waveguide_family(model, nullptr, br[0]);
  auto l1 = correction_L1(fam, eff);
  for (double p : {-1.0, -0.5, 0.0, 0.5, 1.0})
    for (double x : {-1.5, 0.0, 0.75})
      REQUIRE(std::abs(l1.eval(p, x)) < 1e-8);
}

TEST_CASE("bloch family correction vanishes for a real band, stably under refinement",
          "[reduction]") {
  PeriodicPotential pot;
  pot.NF = 1;
  pot.vhat = [](int n, double x) {
    return n == 0 ? cplx(0.0) : cplx(0.5 * (1.0 + 0.2 * std::tanh(x)), 0.0);
  };
  pot.U = [](double) { return 1.0; };
  pot.dU = [](double) { return 0.0; };
  auto xg = linspace(-1.0, 1.0, 9);
  auto eff = make_bloch_effective(pot, 1, xg);
  eff.mu = 0.1;
  eff.h = 0.1;

  // a non-degenerate real band carries no first-order transport term; the
  // fitted correction must cancel to solver precision at every resolution
  for (int n_pw : {128, 256}) {
    auto fam = make_bloch_family(pot, 1, n_pw);
    auto l1 = correction_L1(fam, eff);
    REQUIRE(!l1.empty());
    for (double p : {0.0, 0.3, 0.8})
      for (double x : {-0.7, 0.0, 0.5}) REQUIRE(std::abs(l1.eval(p, x)) < 1e-8);
  }
}

TEST_CASE("second corrector solves the deflated cell problem", "[reduction]") {
  auto xg = linspace(-2.0, 2.0, 81);
  auto yg = linspace(-8.0, 8.0, 241);

  // separable: corrector vanishes
  auto sep_model = ConfinementModel::harmonic([](double) { return std::sqrt(2.0); });
  auto sep_br = track_branches(sep_model, xg, yg, 1);
  auto sep_eff = effective_hamiltonian(sep_br[0], [](double x) { return std::cos(x); });
  auto sep_fam = make_waveguide_family(sep_model, [](double x) { return std::cos(x); }, sep_br[0]);
  auto sep_l1 = correction_L1(sep_fam, sep_eff);
  auto sep_chi1 = correction_chi1(sep_fam, sep_eff, sep_l1, 0.5, 0.25);
  const double dy = grid_step(yg);
  double amp = 0.0;
  for (const auto& v : sep_chi1.chi1) amp = std::max(amp, std::abs(v));
  REQUIRE(amp < 1e-10);

  // non-separable: orthogonality constraint and residual
  auto model = ConfinementModel::harmonic(
      [](double x) { return std::sqrt(2.0) * std::sqrt(1.0 + 0.2 * x * std::exp(-x * x)); });
  auto br = track_branches(model, xg, yg, 1);
  auto eff = effective_hamiltonian(br[0], nullptr);
  auto fam = make_waveguide_family(model, nullptr, br[0]);
  auto l1 = correction_L1(fam, eff);
  auto r = correction_chi1(fam, eff, l1, 0.5, 0.5);
  REQUIRE(r.solvability < 1e-8);
  REQUIRE(r.residual < 1e-8);
  auto chi0 = fam.chi0(0.5, 0.5);
  cplx ip = 0.0;
  for (std::size_t j = 0; j < yg.size(); ++j) {
    const double wq = (j == 0 || j + 1 == yg.size()) ? 0.5 : 1.0;
    ip += wq * std::conj(chi0[j]) * r.chi1[j] * dy;
  }
  REQUIRE(std::abs(ip) < 1e-10);
}

TEST_CASE("the corrector raises the residual order to two", "[reduction]") {
  auto xg = linspace(-2.0, 2.0, 161);
  auto yg = linspace(-8.0, 8.0, 201);
  auto model = ConfinementModel::harmonic(
      [](double x) { return std::sqrt(2.0) * std::sqrt(1.0 + 0.2 * x * std::exp(-x * x)); });
  auto br = track_branches(model, xg, yg, 1);
  const std::vector<double> mus = {1e-1, 3e-2, 1e-2};

  auto slope_for = [&](bool with_corrections) {
    auto sym = build_reduction_symbols(model, nullptr, br[0], with_corrections);
    auto res = reduction_residual(sym.chi, sym.L, sym.H, nullptr, 2);
    std::vector<double> lx, ly;
    for (double mu : mus) {
      double total = 0.0;
      for (int j = 0; j <= 2; ++j) total += std::pow(mu, j) * order_norm(res, j);
      lx.push_back(std::log(mu));
      ly.push_back(std::log(total));
    }
    const double mx = (lx[0] + lx[1] + lx[2]) / 3.0, my = (ly[0] + ly[1] + ly[2]) / 3.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
  };

  REQUIRE(slope_for(false) >= 0.9);
  REQUIRE(slope_for(true) >= 1.9);
}

TEST_CASE("geometric potential is minus curvature squared over eight", "[reduction]") {
  REQUIRE(geometric_potential({0.0, 0.0}) == std::vector<double>{0.0, 0.0});
  REQUIRE(geometric_potential({2.0})[0] == -0.5);
  auto xs = linspace(-3.0, 3.0, 61);
  std::vector<double> k(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) k[i] = 1.0 / std::cosh(xs[i]);
  auto G = geometric_potential(k);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double s = 1.0 / std::cosh(xs[i]);
    REQUIRE(std::abs(G[i] + s * s / 8.0) < 1e-16);
  }
}

TEST_CASE("regime classification follows the canonical exponents", "[reduction]") {
  REQUIRE(classify_regime(0.01, 0.01) == Regime::ShortWave);
  REQUIRE(classify_regime(0.01, 0.1) == Regime::MediumWave);
  REQUIRE(classify_regime(0.01, 1.0) == Regime::LongWave);
  REQUIRE(classify_regime(0.01, 0.003) == Regime::UltraShortWave);
  for (double mu : {1e-1, 1e-2, 1e-3}) {
    REQUIRE(classify_regime(mu, mu) == Regime::ShortWave);
    REQUIRE(classify_regime(mu, std::sqrt(mu)) == Regime::MediumWave);
  }
  REQUIRE_THROWS_AS(classify_regime(0.01, 1.5), validation_error);
  REQUIRE_THROWS_AS(classify_regime(0.01, 0.0009), validation_error);
  REQUIRE_THROWS_AS(classify_regime(1.2, 0.5), validation_error);
}

TEST_CASE("essential assembly applies the regime-specific scalings", "[reduction]") {
  auto xg = linspace(0.0, 2.0 * pi, 65);
  EffectiveModel eff;
  eff.x_grid = xg;
  eff.v_ext.resize(xg.size());
  eff.eps.assign(xg.size(), 0.0);
  for (std::size_t i = 0; i < xg.size(); ++i) eff.v_ext[i] = std::sin(xg[i]);

  // short wave: unit rescaling, potential shifted by its left-end value
  eff.mu = eff.h = 0.05;
  auto ess = assemble_essential(eff);
  REQUIRE(ess.regime == Regime::ShortWave);
  REQUIRE(std::abs(ess.zero_order - std::sin(xg[0])) < 1e-15);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    REQUIRE(std::abs(ess.v_eff_total[i] - (std::sin(xg[i]) - std::sin(xg[0]))) < 1e-14);
    REQUIRE(ess.c1[i] == 0.0);
    REQUIRE(ess.kinetic_factor[i] == 1.0);
  }

  // medium wave: L1(x,0) joins the potential with weight h^2/mu = 1
  eff.mu = 0.01;
  eff.h = 0.1;
  eff.L1.x_grid = xg;
  eff.L1.p_samples = {0.0};
  eff.L1.samples.assign(1, std::vector<cplx>(xg.size(), 0.0));
  eff.L1.ell0.resize(xg.size());
  eff.L1.ell1.assign(xg.size(), cplx(0.25, 0.0));
  eff.L1.ell2.assign(xg.size(), 0.0);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    eff.L1.ell0[i] = std::cos(xg[i]);
    eff.L1.samples[0][i] = eff.L1.ell0[i];
  }
  auto essm = assemble_essential(eff);
  REQUIRE(essm.regime == Regime::MediumWave);
  const double pref = eff.h * eff.h / eff.mu;
  REQUIRE(std::abs(pref - 1.0) < 1e-15);
  const double r = eff.h * eff.h / (eff.mu * eff.mu);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    const double base = r * (std::sin(xg[i]) - std::sin(xg[0]));
    REQUIRE(std::abs(essm.v_eff_total[i] - base - std::cos(xg[i])) < 1e-12);
    REQUIRE(std::abs(essm.c1[i] - eff.h * 0.25) < 1e-15);
  }

  // long wave: geometric potential enters, L1(x,0) must vanish
  EffectiveModel effl;
  effl.x_grid = xg;
  effl.v_ext.assign(xg.size(), 0.0);
  effl.eps.assign(xg.size(), 0.0);
  effl.mu = 0.01;
  effl.h = 1.0;
  effl.G.resize(xg.size());
  for (std::size_t i = 0; i < xg.size(); ++i) {
    const double s = 1.0 / std::cosh(xg[i] - pi);
    effl.G[i] = -s * s / 8.0;
  }
  auto essl = assemble_essential(effl);
  REQUIRE(essl.regime == Regime::LongWave);
  for (std::size_t i = 0; i < xg.size(); ++i)
    REQUIRE(std::abs(essl.v_eff_total[i] - effl.G[i]) < 1e-15);
}

TEST_CASE("reduced stationary solve matches oscillator and box analytics", "[reduction]") {
  EssentialHamiltonian ess;
  ess.mu = ess.h = 0.1;
  ess.x_grid = linspace(-4.0, 4.0, 2001);
  const std::size_t nx = ess.x_grid.size();
  ess.v_eff_total.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) ess.v_eff_total[i] = 0.5 * ess.x_grid[i] * ess.x_grid[i];
  ess.c1.assign(nx, 0.0);
  ess.kinetic_factor.assign(nx, 1.0);
  auto st = solve_reduced_stationary(ess, 4);
  for (int n = 0; n < 4; ++n)
    REQUIRE(std::abs(st.values[std::size_t(n)] - ess.h * (n + 0.5)) < 5e-5);

  // rigid box: compare with the exact discrete Dirichlet eigenvalue
  EssentialHamiltonian box;
  box.mu = box.h = 0.2;
  box.x_grid = linspace(0.0, 1.0, 501);
  box.v_eff_total.assign(501, 0.0);
  box.c1.assign(501, 0.0);
  box.kinetic_factor.assign(501, 1.0);
  auto bs = solve_reduced_stationary(box, 3);
  const double dx = grid_step(box.x_grid);
  // eigenvalues agree with the closed form up to rounding at the matrix scale
  const double eig_eps =
      32.0 * std::numeric_limits<double>::epsilon() * (2.0 * box.h * box.h / (dx * dx));
  for (int n = 1; n <= 3; ++n) {
    const double discrete = box.h * box.h * (1.0 - std::cos(n * pi * dx)) / (dx * dx);
    REQUIRE(std::abs(bs.values[std::size_t(n - 1)] - discrete) < eig_eps);
    REQUIRE(std::abs(bs.values[std::size_t(n - 1)] - n * n * pi * pi * box.h * box.h / 2.0) <
            1e-4);
  }

  // curvature-induced well binds at least one state
  EssentialHamiltonian curved;
  curved.mu = curved.h = 1.0;
  curved.x_grid = linspace(-60.0, 60.0, 2401);
  const std::size_t nc = curved.x_grid.size();
  curved.v_eff_total.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    const double s = 1.0 / std::cosh(curved.x_grid[i]);
    curved.v_eff_total[i] = -s * s / 8.0;
  }
  curved.c1.assign(nc, 0.0);
  curved.kinetic_factor.assign(nc, 1.0);
  REQUIRE(solve_reduced_stationary(curved, 1).values[0] < 0.0);
}

TEST_CASE("reduced solve is additive in constant shifts and second order in the step",
          "[reduction]") {
  auto make = [](std::size_t n, double shift) {
    EssentialHamiltonian ess;
    ess.mu = ess.h = 0.1;
    ess.x_grid = linspace(-4.0, 4.0, n);
    ess.v_eff_total.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      ess.v_eff_total[i] = 0.5 * ess.x_grid[i] * ess.x_grid[i] + shift;
    ess.c1.assign(n, 0.0);
    ess.kinetic_factor.assign(n, 1.0);
    return ess;
  };
  auto base = solve_reduced_stationary(make(801, 0.0), 3);
  auto lifted = solve_reduced_stationary(make(801, 0.7), 3);
  for (std::size_t k = 0; k < 3; ++k)
    REQUIRE(std::abs(lifted.values[k] - base.values[k] - 0.7) < 1e-10);

  auto fine = solve_reduced_stationary(make(1601, 0.0), 1);
  const double e0 = 0.05;
  const double ratio = std::abs(base.values[0] - e0) / std::abs(fine.values[0] - e0);
  REQUIRE(ratio > 3.5);
  REQUIRE(ratio < 4.5);
}
