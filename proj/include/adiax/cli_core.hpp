#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "validation.hpp"

namespace adiax {
namespace cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// strict config access: every key must be consumed exactly once

class StrictView {
 public:
  StrictView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw validation_error("config: " + path_ + " must be an object");
  }
  const json& require(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw validation_error("config: missing key " + path_ + "." + key);
    seen_.insert(key);
    return *it;
  }
  const json* optional(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }
  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw validation_error("config: unknown key " + path_ + "." + item.key());
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw validation_error("config: " + where + " must be a number");
  return v.get<double>();
}
inline double positive(const json& v, const std::string& where) {
  const double d = as_double(v, where);
  if (!(d > 0.0)) throw validation_error("config: " + where + " must be positive");
  return d;
}
inline long as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw validation_error("config: " + where + " must be an integer");
  return v.get<long>();
}
inline std::size_t count_at_least(const json& v, long floor, const std::string& where) {
  const long n = as_int(v, where);
  if (n < floor)
    throw validation_error("config: " + where + " must be >= " + std::to_string(floor));
  return std::size_t(n);
}
inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw validation_error("config: " + where + " must be a string");
  return v.get<std::string>();
}

struct GridSpec {
  double min = 0.0, max = 0.0;
  std::size_t n = 0;
  std::vector<double> build() const { return linspace(min, max, n); }
};

inline GridSpec parse_grid(const json& j, const std::string& path) {
  StrictView v(j, path);
  GridSpec g;
  g.min = as_double(v.require("min"), path + ".min");
  g.max = as_double(v.require("max"), path + ".max");
  g.n = count_at_least(v.require("n"), 4, path + ".n");
  v.finish();
  if (!(g.max > g.min)) throw validation_error("config: " + path + " needs max > min");
  return g;
}

// ---------------------------------------------------------------------------
// parameterized model families

inline std::function<double(double)> parse_v_ext(const json& j, const std::string& path) {
  StrictView v(j, path);
  const std::string type = as_string(v.require("type"), path + ".type");
  std::function<double(double)> f;
  if (type == "none") {
    f = nullptr;
  } else if (type == "cosine") {
    const double amp = as_double(v.require("amp"), path + ".amp");
    f = [amp](double x) { return amp * std::cos(x); };
  } else if (type == "gaussian") {
    const double height = as_double(v.require("height"), path + ".height");
    const double center = as_double(v.require("center"), path + ".center");
    const double width = positive(v.require("width"), path + ".width");
    f = [height, center, width](double x) {
      const double u = (x - center) / width;
      return height * std::exp(-u * u);
    };
  } else if (type == "gauss_step") {
    const double height = as_double(v.require("height"), path + ".height");
    const double step = as_double(v.require("step"), path + ".step");
    const double rate = positive(v.require("rate"), path + ".rate");
    f = [height, step, rate](double x) {
      return height * std::exp(-x * x) + 0.5 * step * (1.0 + std::tanh(rate * x));
    };
  } else if (type == "poly_even") {
    const double c2 = as_double(v.require("c2"), path + ".c2");
    const double c4 = as_double(v.require("c4"), path + ".c4");
    f = [c2, c4](double x) { return c2 * x * x + c4 * x * x * x * x; };
  } else {
    throw validation_error("config: " + path + ".type unknown: " + type);
  }
  v.finish();
  return f;
}

// smooth deterministic perturbation for robustness experiments; the seed is
// the only randomness source in a run
inline std::function<double(double)> parse_test_field(const json& j, const std::string& path,
                                                      double xmin, double xmax) {
  StrictView v(j, path);
  const auto seed = std::uint64_t(count_at_least(v.require("seed"), 0, path + ".seed"));
  const double amp = positive(v.require("amp"), path + ".amp");
  std::size_t modes = 4;
  if (const json* m = v.optional("n_modes")) modes = count_at_least(*m, 1, path + ".n_modes");
  v.finish();
  std::uint64_t state = seed * 0x9E3779B97F4A7C15ULL + 0x243F6A8885A308D3ULL;
  std::vector<double> a(modes), phase(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    a[k] = 2.0 * detail::lcg_unit(state) - 1.0;
    phase[k] = 2.0 * pi * detail::lcg_unit(state);
  }
  const double L = xmax - xmin;
  return [=](double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < modes; ++k)
      s += a[k] * std::cos(2.0 * pi * double(k + 1) * (x - xmin) / L + phase[k]);
    return amp * s;
  };
}

inline ConfinementModel parse_confinement(const json& j, const std::string& path) {
  StrictView v(j, path);
  const std::string type = as_string(v.require("type"), path + ".type");
  ConfinementModel model;
  if (type == "rigid_wall") {
    const double y1 = as_double(v.require("y1"), path + ".y1");
    const double y2 = as_double(v.require("y2"), path + ".y2");
    if (!(y2 > y1)) throw validation_error("config: " + path + " needs y2 > y1");
    model = ConfinementModel::rigid_wall(y1, y2);
  } else if (type == "power_well") {
    const long m = as_int(v.require("m"), path + ".m");
    if (m < 1 || m > 8) throw validation_error("config: " + path + ".m must be in [1, 8]");
    const double D0 = positive(v.require("D0"), path + ".D0");
    double D1 = 0.0, sigma = 1.0;
    if (const json* p = v.optional("D1")) D1 = as_double(*p, path + ".D1");
    if (const json* p = v.optional("sigma")) sigma = positive(*p, path + ".sigma");
    if (!(D0 + std::min(0.0, D1) > 0.0))
      throw validation_error("config: " + path + " width must stay positive");
    model = ConfinementModel::power_well(
        [D0, D1, sigma](double x) {
          const double u = x / sigma;
          return D0 + D1 * std::exp(-u * u);
        },
        int(m));
  } else if (type == "harmonic") {
    const double om0 = positive(v.require("omega0"), path + ".omega0");
    double om1 = 0.0, sigma = 1.0;
    if (const json* p = v.optional("omega1")) om1 = as_double(*p, path + ".omega1");
    if (const json* p = v.optional("sigma")) sigma = positive(*p, path + ".sigma");
    if (!(om0 + std::min(0.0, om1) > 0.0))
      throw validation_error("config: " + path + " frequency must stay positive");
    model = ConfinementModel::harmonic([om0, om1, sigma](double x) {
      const double u = x / sigma;
      return om0 + om1 * std::exp(-u * u);
    });
  } else {
    throw validation_error("config: " + path + ".type unknown: " + type);
  }
  v.finish();
  return model;
}

inline PeriodicPotential parse_periodic(const json& j, const std::string& path) {
  StrictView v(j, path);
  const std::string type = as_string(v.require("type"), path + ".type");
  PeriodicPotential pot;
  if (type == "mathieu") {
    const double a = positive(v.require("a"), path + ".a");
    pot = mathieu_potential(a);
  } else if (type == "fourier") {
    const json& coeffs = v.require("coeffs");
    if (!coeffs.is_array() || coeffs.empty())
      throw validation_error("config: " + path + ".coeffs must be a non-empty array");
    int nf = 0;
    std::vector<std::pair<int, cplx>> terms;
    for (const auto& t : coeffs) {
      if (!t.is_array() || t.size() != 3)
        throw validation_error("config: " + path + ".coeffs entries must be [n, re, im]");
      const int n = int(as_int(t[0], path + ".coeffs[].n"));
      terms.emplace_back(n, cplx(as_double(t[1], path + ".coeffs[].re"),
                                 as_double(t[2], path + ".coeffs[].im")));
      nf = std::max(nf, std::abs(n));
    }
    pot.NF = nf;
    pot.vhat = [terms](int n, double) {
      cplx s = 0.0;
      for (const auto& t : terms)
        if (t.first == n) s += t.second;
      return s;
    };
  } else {
    throw validation_error("config: " + path + ".type unknown: " + type);
  }
  double u = 1.0;
  if (const json* p = v.optional("U")) u = positive(*p, path + ".U");
  pot.U = [u](double) { return u; };
  pot.dU = [](double) { return 0.0; };
  v.finish();
  return pot;
}

// ---------------------------------------------------------------------------
// output plumbing

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hash_hex(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

inline std::string num17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class RunOutput {
 public:
  RunOutput(const std::filesystem::path& outdir, const std::string& command,
            const std::string& hash)
      : dir_(outdir / command / hash) {
    std::filesystem::create_directories(dir_);
  }
  const std::filesystem::path& dir() const { return dir_; }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    const auto p = dir_ / name;
    std::ofstream out(p);
    if (!out) throw validation_error("cannot open output file " + p.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    written_.push_back(p);
  }
  void remove_partial() {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }
  std::vector<std::string> file_names() const {
    std::vector<std::string> names;
    for (const auto& p : written_) names.push_back(p.filename().string());
    return names;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

// ---------------------------------------------------------------------------
// shared waveguide assembly

struct WaveguideSetup {
  double mu = 0.0, h = 0.0;
  Regime regime = Regime::ShortWave;
  std::vector<double> x_grid, y_grid;
  ConfinementModel model;
  std::function<double(double)> v_ext;
  std::function<double(double)> curvature;
  int nu = 1;
};

inline WaveguideSetup parse_waveguide(StrictView& v) {
  WaveguideSetup w;
  w.mu = positive(v.require("mu"), "config.mu");
  w.h = positive(v.require("h"), "config.h");
  w.regime = classify_regime(w.mu, w.h);
  if (const json* p = v.optional("regime")) {
    const std::string name = as_string(*p, "config.regime");
    bool known = false;
    for (Regime r : {Regime::ShortWave, Regime::MediumWave, Regime::LongWave,
                     Regime::UltraShortWave})
      if (name == regime_name(r)) {
        w.regime = r;
        known = true;
      }
    if (!known) throw validation_error("config.regime unknown: " + name);
  }
  const GridSpec xg = parse_grid(v.require("x_grid"), "config.x_grid");
  const GridSpec yg = parse_grid(v.require("y_grid"), "config.y_grid");
  w.x_grid = xg.build();
  w.y_grid = yg.build();
  w.model = parse_confinement(v.require("confinement"), "config.confinement");
  if (const json* p = v.optional("v_ext")) w.v_ext = parse_v_ext(*p, "config.v_ext");
  if (const json* p = v.optional("test_field")) {
    auto bump = parse_test_field(*p, "config.test_field", xg.min, xg.max);
    auto base = w.v_ext;
    w.v_ext = [bump, base](double x) { return (base ? base(x) : 0.0) + bump(x); };
  }
  if (const json* p = v.optional("curvature")) {
    StrictView c(*p, "config.curvature");
    const std::string type = as_string(c.require("type"), "config.curvature.type");
    if (type != "sech")
      throw validation_error("config.curvature.type unknown: " + type);
    const double k0 = as_double(c.require("k0"), "config.curvature.k0");
    c.finish();
    w.curvature = [k0](double x) { return k0 / std::cosh(x); };
  }
  if (const json* p = v.optional("nu")) w.nu = int(count_at_least(*p, 1, "config.nu"));
  return w;
}

inline EffectiveModel waveguide_effective(const WaveguideSetup& w, std::size_t threads,
                                          std::vector<TermBranch>* branches_out = nullptr) {
  auto br = track_branches(w.model, w.x_grid, w.y_grid, std::size_t(w.nu), 1e-6, threads);
  auto eff = effective_hamiltonian(br[std::size_t(w.nu - 1)], w.v_ext);
  eff.mu = w.mu;
  eff.h = w.h;
  eff.regime = w.regime;
  if (w.curvature) {
    std::vector<double> k(w.x_grid.size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = w.curvature(w.x_grid[i]);
    eff.G = geometric_potential(k);
  }
  if (branches_out) *branches_out = std::move(br);
  return eff;
}

// ---------------------------------------------------------------------------
// commands

struct CommandContext {
  json config;
  std::filesystem::path outdir;
  std::size_t threads = 1;
  json summary_extra = json::object();
  std::string regime_tag;
};

inline void cmd_bands(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  const std::string kind = as_string(v.require("kind"), "config.kind");
  const std::size_t K = count_at_least(v.require("bands"), 1, "config.bands");
  if (kind == "waveguide") {
    WaveguideSetup w = parse_waveguide(v);
    v.finish();
    ctx.regime_tag = regime_name(w.regime);
    auto br = track_branches(w.model, w.x_grid, w.y_grid, K, 1e-6, ctx.threads);
    std::vector<std::string> header = {"x"};
    for (std::size_t k = 1; k <= K; ++k) header.push_back("eps_" + std::to_string(k));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < w.x_grid.size(); ++i) {
      std::vector<std::string> row = {num17(w.x_grid[i])};
      for (std::size_t k = 0; k < K; ++k) row.push_back(num17(br[k].eps[i]));
      rows.push_back(std::move(row));
    }
    out.write_csv("branches.csv", header, rows);
  } else if (kind == "bloch") {
    auto pot = parse_periodic(v.require("periodic_potential"), "config.periodic_potential");
    std::size_t nP = 64;
    if (const json* p = v.optional("P_nodes")) nP = count_at_least(*p, 8, "config.P_nodes");
    int n_pw = 16;
    if (const json* p = v.optional("n_pw")) n_pw = int(count_at_least(*p, 4, "config.n_pw"));
    double x0 = 0.0;
    if (const json* p = v.optional("x0")) x0 = as_double(*p, "config.x0");
    v.finish();
    auto bands = tabulate_bands(pot, {x0}, nP, int(K), n_pw, ctx.threads);
    std::vector<std::string> header = {"P"};
    for (std::size_t k = 1; k <= K; ++k) header.push_back("E_" + std::to_string(k));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < bands[0].P_grid.size(); ++j) {
      std::vector<std::string> row = {num17(bands[0].P_grid[j])};
      for (std::size_t k = 0; k < K; ++k) row.push_back(num17(bands[k].E[j][0]));
      rows.push_back(std::move(row));
    }
    out.write_csv("bands.csv", header, rows);
  } else {
    throw validation_error("config.kind unknown: " + kind);
  }
}

inline void cmd_reduce(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  const std::string kind = as_string(v.require("kind"), "config.kind");
  if (kind == "waveguide") {
    WaveguideSetup w = parse_waveguide(v);
    v.finish();
    ctx.regime_tag = regime_name(w.regime);
    std::vector<TermBranch> br;
    auto eff = waveguide_effective(w, ctx.threads, &br);
    auto fam = make_waveguide_family(w.model, w.v_ext, br[std::size_t(w.nu - 1)]);
    eff.L1 = correction_L1(fam, eff);
    auto ess = assemble_essential(eff);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < w.x_grid.size(); ++i) {
      const double x = w.x_grid[i];
      const cplx l0 = eff.L1.eval(0.0, x);
      rows.push_back({num17(x), num17(eff.potential(x)), num17(l0.real()), num17(l0.imag()),
                      num17(eff.G.empty() ? 0.0 : eff.G[i]), num17(ess.v_eff_total[i]),
                      num17(ess.c1[i]), num17(ess.kinetic_factor[i])});
    }
    out.write_csv("reduced.csv",
                  {"x", "H_eff_p0", "L1_re", "L1_im", "G", "v_essential", "c1", "kinetic_factor"},
                  rows);
    ctx.summary_extra["zero_order"] = ess.zero_order;
  } else if (kind == "bloch") {
    auto pot = parse_periodic(v.require("periodic_potential"), "config.periodic_potential");
    const GridSpec xg = parse_grid(v.require("x_grid"), "config.x_grid");
    const double mu = positive(v.require("mu"), "config.mu");
    const double h = positive(v.require("h"), "config.h");
    int nu = 1;
    if (const json* p = v.optional("nu")) nu = int(count_at_least(*p, 1, "config.nu"));
    double p0 = 0.0;
    if (const json* p = v.optional("p0")) p0 = as_double(*p, "config.p0");
    v.finish();
    ctx.regime_tag = regime_name(classify_regime(mu, h));
    auto x_grid = xg.build();
    auto eff = make_bloch_effective(pot, nu, x_grid);
    std::vector<std::vector<std::string>> rows;
    for (double x : x_grid)
      rows.push_back({num17(x), num17(eff.Heff(p0, x)), num17(eff.dHeff_dp(p0, x))});
    out.write_csv("reduced.csv", {"x", "H_eff", "dH_eff_dp"}, rows);
  } else {
    throw validation_error("config.kind unknown: " + kind);
  }
}

inline void cmd_bound_states(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  auto well = parse_v_ext(v.require("well"), "config.well");
  if (!well) throw validation_error("config.well must define a potential");
  StrictView win(v.require("window"), "config.window");
  const double a = as_double(win.require("min"), "config.window.min");
  const double b = as_double(win.require("max"), "config.window.max");
  win.finish();
  if (!(b > a)) throw validation_error("config.window needs max > min");
  const double h = positive(v.require("h"), "config.h");
  const long n_lo = as_int(v.require("n_lo"), "config.n_lo");
  const long n_hi = as_int(v.require("n_hi"), "config.n_hi");
  if (n_lo < 0 || n_hi < n_lo) throw validation_error("config: need 0 <= n_lo <= n_hi");
  std::string method = "both";
  if (const json* p = v.optional("method")) method = as_string(*p, "config.method");
  if (method != "series" && method != "direct" && method != "both")
    throw validation_error("config.method must be series, direct, or both");
  double transport_c = 0.0;
  bool with_transport = false;
  if (const json* p = v.optional("transport_c")) {
    transport_c = as_double(*p, "config.transport_c");
    with_transport = true;
  }
  std::size_t nx = 2001;
  if (const json* p = v.optional("x_nodes")) nx = count_at_least(*p, 16, "config.x_nodes");
  v.finish();

  const std::size_t count = std::size_t(n_hi - n_lo + 1);
  std::vector<double> series, beta, shifted, direct;
  if (method != "direct") {
    BohrSommerfeldProblem prob;
    prob.v = well;
    prob.a = a;
    prob.b = b;
    prob.h = h;
    if (with_transport) {
      HamiltonianField field = potential_field(well);
      const double c = transport_c;
      field.L1 = [c](double, double) { return TransportMatrix{{cplx(c, 0.0)}}; };
      auto ser = spectral_series(field, prob, int(n_lo), int(n_hi));
      series = ser.E;
      for (std::size_t i = 0; i < ser.E.size(); ++i) {
        beta.push_back(ser.beta[i][0]);
        shifted.push_back(ser.E_split[i][0]);
      }
    } else {
      series = bohr_sommerfeld(prob, int(n_lo), int(n_hi));
      beta.assign(series.size(), 0.0);
      shifted = series;
    }
  }
  if (method != "series") {
    EssentialHamiltonian ess;
    ess.mu = ess.h = h;
    ess.x_grid = linspace(a, b, nx);
    ess.v_eff_total.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) ess.v_eff_total[i] = well(ess.x_grid[i]);
    ess.c1.assign(nx, 0.0);
    ess.kinetic_factor.assign(nx, 1.0);
    auto st = solve_reduced_stationary(ess, std::size_t(n_hi) + 1);
    for (long n = n_lo; n <= n_hi; ++n) direct.push_back(st.values[std::size_t(n)]);
  }

  std::vector<std::string> header = {"n"};
  if (!series.empty()) {
    header.push_back("E_series");
    header.push_back("beta");
    header.push_back("E_shifted");
  }
  if (!direct.empty()) header.push_back("E_direct");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::string> row = {std::to_string(n_lo + long(i))};
    if (!series.empty()) {
      row.push_back(num17(series[i]));
      row.push_back(num17(beta[i]));
      row.push_back(num17(shifted[i]));
    }
    if (!direct.empty()) row.push_back(num17(direct[i]));
    rows.push_back(std::move(row));
  }
  out.write_csv("levels.csv", header, rows);
  ctx.summary_extra["levels"] = long(count);
}

inline void cmd_scatter(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  auto veff = parse_v_ext(v.require("v_eff"), "config.v_eff");
  if (!veff) throw validation_error("config.v_eff must define a potential");
  StrictView win(v.require("window"), "config.window");
  const double a = as_double(win.require("min"), "config.window.min");
  const double b = as_double(win.require("max"), "config.window.max");
  win.finish();
  if (!(b > a)) throw validation_error("config.window needs max > min");
  const double h = positive(v.require("h"), "config.h");
  StrictView tails(v.require("tails"), "config.tails");
  const double vm = as_double(tails.require("v_minus"), "config.tails.v_minus");
  const double vp = as_double(tails.require("v_plus"), "config.tails.v_plus");
  tails.finish();
  StrictView es(v.require("energies"), "config.energies");
  const double e_min = as_double(es.require("min"), "config.energies.min");
  const double e_max = as_double(es.require("max"), "config.energies.max");
  const std::size_t e_n = count_at_least(es.require("n"), 1, "config.energies.n");
  es.finish();
  if (!(e_max >= e_min)) throw validation_error("config.energies needs max >= min");
  if (!(e_min > vm))
    throw validation_error("config.energies.min must exceed tails.v_minus");
  v.finish();

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < e_n; ++i) {
    const double E = e_n == 1 ? e_min : e_min + (e_max - e_min) * double(i) / double(e_n - 1);
    auto s = scatter_1d(veff, a, b, E, h, vm, vp);
    rows.push_back({num17(E),
                    s.outcome == ScatterOutcome::Transmitted ? "Transmitted" : "Reflected",
                    num17(s.p_minus), num17(s.p_plus), num17(s.x_f),
                    s.reflected_phase ? "1" : "0"});
  }
  out.write_csv("scatter.csv", {"E", "outcome", "p_minus", "p_plus", "x_f", "reflected_phase"},
                rows);
  ctx.summary_extra["energies"] = long(e_n);
}

inline void cmd_propagate(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  const std::string kind = as_string(v.require("kind"), "config.kind");
  if (kind != "waveguide") throw validation_error("propagate supports kind waveguide only");
  WaveguideSetup w = parse_waveguide(v);
  StrictView pk(v.require("packet"), "config.packet");
  const double x0 = as_double(pk.require("x0"), "config.packet.x0");
  const double sigma = positive(pk.require("sigma"), "config.packet.sigma");
  const double p0 = as_double(pk.require("p0"), "config.packet.p0");
  pk.finish();
  const double t_final = positive(v.require("t_final"), "config.t_final");
  std::size_t n_snap = 2;
  if (const json* p = v.optional("n_snapshots"))
    n_snap = count_at_least(*p, 2, "config.n_snapshots");
  std::string method = "both";
  if (const json* p = v.optional("method")) method = as_string(*p, "config.method");
  if (method != "wkb" && method != "cn" && method != "both")
    throw validation_error("config.method must be wkb, cn, or both");
  double dt = 1e-3;
  if (const json* p = v.optional("dt")) dt = positive(*p, "config.dt");
  v.finish();
  ctx.regime_tag = regime_name(w.regime);

  std::vector<double> snap_times(n_snap);
  for (std::size_t i = 0; i < n_snap; ++i)
    snap_times[i] = t_final * double(i) / double(n_snap - 1);
  std::vector<std::vector<std::string>> rows;
  auto phi0 = [x0, sigma](double x) {
    return cplx(std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma)), 0.0);
  };
  auto br = track_branches(w.model, w.x_grid, w.y_grid, std::size_t(w.nu), 1e-6, ctx.threads);
  const std::size_t bi = std::size_t(w.nu - 1);

  if (method != "cn") {
    const EffectiveModel eff = effective_hamiltonian(br[bi], w.v_ext);
    HamiltonianField field;
    field.H = [eff](double p, double x) { return eff.Heff(p, x); };
    field.dH_dp = [eff](double p, double x) { return eff.dHeff_dp(p, x); };
    field.dH_dx = [eff](double p, double x) { return eff.dHeff_dx(p, x); };
    auto fan = launch_fan(field, [p0](double x) { return p0 * x; },
                          [p0](double) { return p0; }, [](double) { return 0.0; }, phi0,
                          linspace(x0 - 4.0 * sigma, x0 + 4.0 * sigma, 321), t_final, 1e-10,
                          ctx.threads);
    for (double t : snap_times) {
      auto psi = wkb_evaluate(fan, t, w.x_grid, w.h);
      for (std::size_t i = 0; i < w.x_grid.size(); ++i)
        rows.push_back({"wkb", num17(t), num17(w.x_grid[i]), num17(std::norm(psi[i]))});
    }
  }
  if (method != "wkb") {
    Rect2DGrid g;
    g.x = w.x_grid;
    g.y = w.y_grid;
    const ConfinementModel model = w.model;
    const auto vext = w.v_ext;
    auto op = assemble_2d(w.mu, [&model, &vext](double x, double y) {
      return model.value(x, y) + (vext ? vext(x) : 0.0);
    }, g);
    std::vector<cplx> f(w.x_grid.size());
    for (std::size_t i = 0; i < w.x_grid.size(); ++i)
      f[i] = std::exp(cplx(0.0, p0 * w.x_grid[i] / w.h)) * phi0(w.x_grid[i]);
    auto psi0 = compose_mode(g, br[bi], f);
    const double n0 = psi0.norm();
    for (auto& cv : psi0.psi) cv /= n0;
    const std::size_t steps_per = std::size_t(t_final / (dt * double(n_snap - 1)) + 0.5);
    if (steps_per == 0) throw validation_error("config.dt too large for the snapshot spacing");
    const std::size_t steps = steps_per * (n_snap - 1);
    auto cn = evolve_cn(psi0, op, t_final / double(steps), steps, steps_per, 1e-12, ctx.threads);
    for (std::size_t s = 0; s < cn.snapshots.size(); ++s) {
      auto coef = project_modes(cn.snapshots[s], br);
      for (std::size_t i = 0; i < w.x_grid.size(); ++i)
        rows.push_back({"cn", num17(cn.times[s]), num17(w.x_grid[i]),
                        num17(std::norm(coef[bi][i]))});
    }
  }
  out.write_csv("density.csv", {"method", "t", "x", "abs2"}, rows);
}

inline void cmd_validate(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  std::vector<int> ids;
  if (const json* p = v.optional("criteria")) {
    if (!p->is_array()) throw validation_error("config.criteria must be an array");
    for (const auto& e : *p) {
      const long id = as_int(e, "config.criteria[]");
      if (id < 1 || id > 10) throw validation_error("config.criteria entries must be in [1, 10]");
      ids.push_back(int(id));
    }
  }
  v.finish();
  auto rep = run_acceptance(ctx.threads, ids);
  json arr = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.results) {
    arr.push_back({{"id", r.id},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"seconds", r.seconds},
                   {"detail", r.detail}});
    rows.push_back({std::to_string(r.id), r.name, r.pass ? "1" : "0", num17(r.seconds)});
  }
  out.write_csv("criteria.csv", {"id", "name", "pass", "seconds"}, rows);
  ctx.summary_extra["criteria"] = arr;
  ctx.summary_extra["all_pass"] = rep.all_pass();
}

inline void cmd_regimes(const json& cfg, CommandContext& ctx, RunOutput& out) {
  StrictView v(cfg, "config");
  const double mu = positive(v.require("mu"), "config.mu");
  if (!(mu < 1.0)) throw validation_error("config.mu must lie in (0, 1)");
  const json& hl = v.require("h_list");
  if (!hl.is_array() || hl.empty())
    throw validation_error("config.h_list must be a non-empty array");
  std::vector<double> hs;
  for (const auto& e : hl) hs.push_back(positive(e, "config.h_list[]"));
  v.finish();
  std::vector<std::vector<std::string>> rows;
  for (double h : hs) {
    const Regime r = classify_regime(mu, h);
    rows.push_back({num17(h), num17(std::log(h) / std::log(mu)), regime_name(r)});
  }
  out.write_csv("regimes.csv", {"h", "alpha", "regime"}, rows);
  (void)ctx;
}

// ---------------------------------------------------------------------------
// driver

inline int run_command(const std::string& command, const std::string& config_path,
                       const std::string& outdir, std::size_t threads) {
  json cfg;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::fprintf(stderr, "cannot open config file %s\n", config_path.c_str());
      return 2;
    }
    try {
      cfg = json::parse(in);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "config parse error: %s\n", e.what());
      return 2;
    }
  }
  const std::string hash = hash_hex(cfg);
  CommandContext ctx;
  ctx.config = cfg;
  ctx.outdir = outdir;
  ctx.threads = threads;
  RunOutput out(ctx.outdir, command, hash);

  const auto t0 = std::chrono::steady_clock::now();
  std::string error = "ok";
  int code = 0;
  try {
    if (command == "bands")
      cmd_bands(cfg, ctx, out);
    else if (command == "reduce")
      cmd_reduce(cfg, ctx, out);
    else if (command == "bound-states")
      cmd_bound_states(cfg, ctx, out);
    else if (command == "scatter")
      cmd_scatter(cfg, ctx, out);
    else if (command == "propagate")
      cmd_propagate(cfg, ctx, out);
    else if (command == "validate")
      cmd_validate(cfg, ctx, out);
    else if (command == "regimes")
      cmd_regimes(cfg, ctx, out);
    else {
      std::fprintf(stderr, "unknown command %s\n", command.c_str());
      return 2;
    }
    if (command == "validate" && ctx.summary_extra.contains("all_pass") &&
        !ctx.summary_extra["all_pass"].get<bool>())
      code = 1;
  } catch (const validation_error& e) {
    out.remove_partial();
    error = std::string("ValidationError: ") + e.what();
    code = 2;
  } catch (const numerical_error& e) {
    out.remove_partial();
    error = e.name;
    code = 3;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary = {{"command", command},
                  {"config_hash", hash},
                  {"wall_time_s", wall},
                  {"error", error},
                  {"files", out.file_names()}};
  if (!ctx.regime_tag.empty()) summary["regime"] = ctx.regime_tag;
  for (const auto& item : ctx.summary_extra.items()) summary[item.key()] = item.value();
  {
    std::ofstream sf(out.dir() / "summary.json");
    sf << summary.dump(2) << "\n";
  }
  std::printf("%s\n", (out.dir() / "summary.json").string().c_str());
  return code;
}

}  // namespace cli
}  // namespace adiax
