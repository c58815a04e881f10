#include <catch2/catch_amalgamated.hpp>

#include <adiax/bloch.hpp>

using namespace adiax;

TEST_CASE("quasimomentum is momentum over phase slope", "[bloch]") {
  REQUIRE(quasimomentum(0.3, 1.0) == 0.3);
  REQUIRE(quasimomentum(0.3, 2.0) == 0.15);
  REQUIRE(quasimomentum(0.0, 5.0) == 0.0);
  REQUIRE_THROWS_AS(quasimomentum(0.3, 0.0), validation_error);
}

TEST_CASE("free bands fold the parabola onto the circle", "[bloch]") {
  PeriodicPotential freep;
  freep.NF = 0;
  freep.vhat = [](int, double) { return cplx(0.0); };
  freep.U = [](double) { return 1.0; };
  freep.dU = [](double) { return 0.0; };
  auto modes = bloch_bands_fourier(freep, 0.0, 0.3, 2, 16);
  REQUIRE(std::abs(modes.values[0] - 0.09) < 1e-10);
  REQUIRE(std::abs(modes.values[1] - 0.49) < 1e-10);
}

TEST_CASE("a constant potential shifts every band rigidly", "[bloch]") {
  PeriodicPotential base = mathieu_potential(0.5);
  PeriodicPotential lifted = base;
  lifted.vhat = [](int n, double) { return n == 0 ? cplx(0.7) : cplx(0.5, 0.0); };
  auto a = bloch_bands_fourier(base, 0.0, 0.25, 3, 16);
  auto b = bloch_bands_fourier(lifted, 0.0, 0.25, 3, 16);
  for (int k = 0; k < 3; ++k) REQUIRE(std::abs(b.values[k] - a.values[k] - 0.7) < 1e-9);
}

TEST_CASE("fourier and monodromy discriminant agree at the band edges", "[bloch]") {
  auto pot = mathieu_potential(0.5);
  for (double P : {0.0, 0.5}) {
    const double target = 2.0 * std::cos(2.0 * pi * P);
    auto modes = bloch_bands_fourier(pot, 0.0, P, 2, 16);
    for (int k = 0; k < 2; ++k) {
      const double E = modes.values[k];
      // the edge is a root of trM(E) = 2cos(2piP): verify the discriminant
      // passes through the target within the secant slope at 1e-6 energy scale
      const double f0 = bloch_discriminant_oracle(pot, 0.0, E) - target;
      const double f1 = bloch_discriminant_oracle(pot, 0.0, E + 1e-6) - target;
      const double root = E - 1e-6 * f0 / (f1 - f0);
      REQUIRE(std::abs(root - E) < 1e-6);
    }
  }
}

TEST_CASE("free monodromy trace is the cosine of the rotation angle", "[bloch]") {
  PeriodicPotential freep;
  freep.NF = 0;
  freep.vhat = [](int, double) { return cplx(0.0); };
  freep.U = [](double) { return 1.0; };
  freep.dU = [](double) { return 0.0; };
  for (double E : {0.1, 0.37, 1.44, 2.0}) {
    const double want = 2.0 * std::cos(2.0 * pi * std::sqrt(E));
    REQUIRE(std::abs(bloch_discriminant_oracle(freep, 0.0, E) - want) < 1e-10);
  }
}

TEST_CASE("band gap check accepts gapped and rejects touching bands", "[bloch]") {
  auto pot = mathieu_potential(0.5);
  auto bands = tabulate_bands(pot, {0.0}, 64, 2, 16);
  REQUIRE(band_gap_check(bands, 1, 1e-3) > 0.0);

  PeriodicPotential freep;
  freep.NF = 0;
  freep.vhat = [](int, double) { return cplx(0.0); };
  freep.U = [](double) { return 1.0; };
  freep.dU = [](double) { return 0.0; };
  auto free_bands = tabulate_bands(freep, {0.0}, 64, 2, 16);
  REQUIRE_THROWS_AS(band_gap_check(free_bands, 1, 1e-3), numerical_error);
}

TEST_CASE("gap widths shrink at least linearly with the modulation", "[bloch]") {
  double prev = -1.0;
  for (double a : {0.1, 0.05, 0.025}) {
    auto m = bloch_bands_fourier(mathieu_potential(a), 0.0, 0.5, 2, 16);
    const double gap = m.values[1] - m.values[0];
    REQUIRE(gap > 0.0);
    if (prev > 0.0) REQUIRE(gap > 0.4 * prev);
    if (prev > 0.0) REQUIRE(gap < 0.5025 * prev);
    prev = gap;
  }
}

TEST_CASE("dispersion is even and periodic in the quasimomentum", "[bloch]") {
  auto pot = mathieu_potential(0.5);
  for (double P : {0.1, 0.3, 0.45}) {
    auto c = bloch_bands_fourier(pot, 0.0, P, 3, 16);
    auto even = bloch_bands_fourier(pot, 0.0, -P, 3, 16);
    auto shift = bloch_bands_fourier(pot, 0.0, P + 1.0, 3, 16);
    for (int k = 0; k < 3; ++k) {
      REQUIRE(std::abs(c.values[k] - even.values[k]) < 1e-10);
      REQUIRE(std::abs(c.values[k] - shift.values[k]) < 1e-10);
    }
  }
}

TEST_CASE("band edges bound the tabulated dispersion", "[bloch]") {
  auto bands = tabulate_bands(mathieu_potential(0.5), {0.0}, 64, 2, 16);
  for (const auto& b : bands)
    for (std::size_t j = 0; j < b.P_grid.size(); ++j) {
      REQUIRE(b.E[j][0] >= b.E_minus[0] - 1e-12);
      REQUIRE(b.E[j][0] <= b.E_plus[0] + 1e-12);
    }
}

TEST_CASE("the effective hamiltonian recovers the free particle", "[bloch]") {
  PeriodicPotential freep;
  freep.NF = 0;
  freep.vhat = [](int, double) { return cplx(0.0); };
  freep.U = [](double) { return 1.0; };
  freep.dU = [](double) { return 0.0; };
  auto xg = linspace(-1.0, 1.0, 5);
  auto eff = make_bloch_effective(freep, 1, xg);
  for (double p : {-0.45, -0.2, 0.0, 0.15, 0.3, 0.45})
    REQUIRE(std::abs(eff.Heff(p, 0.0) - p * p) < 1e-8);
  // p = 0 equals the band bottom
  auto modes = bloch_bands_fourier(mathieu_potential(0.5), 0.0, 0.0, 1, 16);
  auto meff = make_bloch_effective(mathieu_potential(0.5), 1, xg);
  REQUIRE(std::abs(meff.Heff(0.0, 0.0) - modes.values[0]) < 1e-12);
}

TEST_CASE("bloch cell functions satisfy the frozen spectral problem", "[bloch]") {
  const std::size_t ny = 128;
  auto pot = mathieu_potential(0.5);

  // free potential: uniform modulus
  PeriodicPotential freep;
  freep.NF = 0;
  freep.vhat = [](int, double) { return cplx(0.0); };
  freep.U = [](double) { return 1.0; };
  freep.dU = [](double) { return 0.0; };
  auto cfree = chi0_bloch(freep, 1, 0.3, 0.0, ny, 16);
  for (const auto& v : cfree) REQUIRE(std::abs(std::abs(v) - std::abs(cfree[0])) < 1e-10);

  auto fam = make_bloch_family(pot, 1, ny);
  auto chi0 = fam.chi0(0.3, 0.0);
  REQUIRE(std::abs(fam.field_norm(chi0) - 1.0) < 1e-10);

  auto eff = make_bloch_effective(pot, 1, linspace(-1.0, 1.0, 5));
  const double heff = eff.Heff(0.3, 0.0);
  auto h0chi = fam.apply_H0(0.3, 0.0, chi0);
  double res = 0.0;
  for (std::size_t j = 0; j < chi0.size(); ++j)
    res = std::max(res, std::abs(h0chi[j] - heff * chi0[j]));
  REQUIRE(res < 1e-8);
}

TEST_CASE("plane-wave truncation failures are reported", "[bloch]") {
  REQUIRE_THROWS_AS(bloch_bands_fourier(mathieu_potential(0.5), 0.0, 0.0, 6, 3), numerical_error);
}
