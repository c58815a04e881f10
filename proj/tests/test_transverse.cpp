#include <catch2/catch_amalgamated.hpp>

#include <adiax/transverse.hpp>

using namespace adiax;

TEST_CASE("rigid wall levels and modes match the Dirichlet analytics", "[transverse]") {
  auto yg = linspace(0.0, 1.0, 801);
  auto lv = solve_transverse_at_x(ConfinementModel::rigid_wall(0.0, 1.0), 0.0, yg, 3);
  const double dy = grid_step(yg);
  for (int nu = 1; nu <= 3; ++nu) {
    const double exact = nu * nu * pi * pi / 2.0;
    // truncation defect of the 3-point stencil: (nu pi)^4 dy^2 / 24
    const double defect = std::pow(nu * pi, 4) * dy * dy / 24.0;
    REQUIRE(std::abs(lv.values[nu - 1] - exact) < 1.05 * defect);
    // discrete eigenvalue in closed form
    const double discrete = (1.0 - std::cos(nu * pi * dy)) / (dy * dy);
    REQUIRE(std::abs(lv.values[nu - 1] - discrete) < 1e-9);
  }
  for (std::size_t j = 0; j < yg.size(); ++j)
    REQUIRE(std::abs(lv.vectors[0][j] - std::sqrt(2.0) * std::sin(pi * yg[j])) < 1e-10);

  // halving the step cuts the defect by ~4
  auto lv2 = solve_transverse_at_x(ConfinementModel::rigid_wall(0.0, 1.0), 0.0,
                                   linspace(0.0, 1.0, 1601), 3);
  for (int nu = 1; nu <= 3; ++nu) {
    const double exact = nu * nu * pi * pi / 2.0;
    const double ratio = std::abs(lv.values[nu - 1] - exact) / std::abs(lv2.values[nu - 1] - exact);
    REQUIRE(ratio > 3.5);
    REQUIRE(ratio < 4.5);
  }
}

TEST_CASE("soft-well levels match oscillator analytics", "[transverse]") {
  auto yg = linspace(-8.5, 8.5, 2401);
  auto harm = solve_transverse_at_x(ConfinementModel::harmonic([](double) { return 2.0; }), 0.0,
                                    yg, 2);
  REQUIRE(std::abs(harm.values[0] - 1.0) < 1e-4);
  REQUIRE(std::abs(harm.values[1] - 3.0) < 1e-4);

  auto well = solve_transverse_at_x(
      ConfinementModel::power_well([](double) { return 1.0; }, 1), 0.0, yg, 1);
  REQUIRE(std::abs(well.values[0] - std::sqrt(2.0) / 2.0) < 1e-4);
}

TEST_CASE("x-independent branches stay constant after tracking", "[transverse]") {
  auto xg = linspace(-1.0, 1.0, 21);
  auto yg = linspace(-7.0, 7.0, 201);
  auto br = track_branches(ConfinementModel::harmonic([](double) { return 1.5; }), xg, yg, 2);
  for (const auto& b : br)
    for (std::size_t i = 0; i < xg.size(); ++i) {
      REQUIRE(std::abs(b.eps[i] - b.eps[0]) < 1e-12);
      for (std::size_t j = 0; j < yg.size(); ++j)
        REQUIRE(std::abs(b.w[i][j] - b.w[0][j]) < 1e-12);
    }
}

TEST_CASE("power-well branch obeys the width-scaling identity", "[transverse]") {
  auto xg = linspace(0.0, 2.0 * pi, 65);
  auto yg = linspace(-7.0, 7.0, 401);
  auto D = [](double x) { return 1.0 + 0.3 * std::sin(x); };
  const int m = 1;
  auto br = track_branches(ConfinementModel::power_well(D, m), xg, yg, 1);
  const double expo = 2.0 * m / (m + 1.0);
  const double ref = br[0].eps[0] * std::pow(D(xg[0]), expo);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    const double scaled = br[0].eps[i] * std::pow(D(xg[i]), expo);
    REQUIRE(std::abs(scaled - ref) < 1e-3 * std::abs(ref));
  }
}

TEST_CASE("branch invariants hold for a smooth model", "[transverse]") {
  auto xg = linspace(-2.0, 2.0, 41);
  auto yg = linspace(-9.0, 9.0, 301);
  auto br = track_branches(
      ConfinementModel::harmonic([](double x) { return 1.0 + 0.2 * std::exp(-x * x); }), xg, yg,
      3);
  const double dy = grid_step(yg);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    for (std::size_t a = 0; a < br.size(); ++a) {
      for (std::size_t b = 0; b < br.size(); ++b) {
        double ip = 0.0;
        for (std::size_t j = 0; j < yg.size(); ++j) {
          const double wq = (j == 0 || j + 1 == yg.size()) ? 0.5 : 1.0;
          ip += wq * br[a].w[i][j] * br[b].w[i][j] * dy;
        }
        REQUIRE(std::abs(ip - (a == b ? 1.0 : 0.0)) < 1e-10);
      }
      if (i + 1 < xg.size()) {
        double ov = 0.0;
        for (std::size_t j = 0; j < yg.size(); ++j) ov += br[a].w[i][j] * br[a].w[i + 1][j];
        REQUIRE(ov > 0.0);
      }
    }
    REQUIRE(br[0].eps[i] < br[1].eps[i]);
    REQUIRE(br[1].eps[i] < br[2].eps[i]);
  }
  REQUIRE(br[0].gap_above > 0.0);
  REQUIRE(br[1].gap_below > 0.0);
}

TEST_CASE("a gap below tolerance reports a degenerate term", "[transverse]") {
  auto xg = linspace(-1.0, 1.0, 11);
  auto yg = linspace(-7.0, 7.0, 201);
  REQUIRE_THROWS_AS(
      track_branches(ConfinementModel::harmonic([](double) { return 1.0; }), xg, yg, 1, 2.0),
      degenerate_term);
}

TEST_CASE("branch derivatives are consistent with analytics", "[transverse]") {
  auto xg = linspace(-1.0, 1.0, 81);
  auto yg = linspace(-9.0, 9.0, 401);

  auto flat = track_branches(ConfinementModel::harmonic([](double) { return 1.3; }), xg, yg, 1);
  auto dflat = branch_x_derivatives(flat[0]);
  for (std::size_t i = 0; i < xg.size(); ++i) {
    REQUIRE(std::abs(dflat.deps_dx[i]) < 1e-12);
    for (std::size_t j = 0; j < yg.size(); ++j) REQUIRE(std::abs(dflat.dw_dx[i][j]) < 1e-10);
  }

  auto tilted =
      track_branches(ConfinementModel::harmonic([](double x) { return 1.0 + 0.1 * x; }), xg, yg, 1);
  auto dt = branch_x_derivatives(tilted[0]);
  const double dx = grid_step(xg);
  for (std::size_t i = 1; i + 1 < xg.size(); ++i)
    REQUIRE(std::abs(dt.deps_dx[i] - 0.05) < 10.0 * dx * dx);
  // normalization makes <w, dw/dx> vanish up to the stencil's own O(dx^2)
  REQUIRE(dt.max_self_overlap < 1e-3 * dx * dx);
}
