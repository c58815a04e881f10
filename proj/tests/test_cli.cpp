#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("adiax_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << cfg.dump(2) << "\n";
  return p;
}

int run_cli(const std::string& command, const fs::path& config, const fs::path& outdir) {
  std::ostringstream cmd;
  cmd << ADIAX_BIN << " " << command << " --config " << config << " --outdir " << outdir
      << " --threads 2 > /dev/null 2>&1";
  const int rc = std::system(cmd.str().c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

fs::path find_file(const fs::path& root, const std::string& name) {
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == name) return e.path();
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("bound-states levels land on the analytic ladder", "[cli]") {
  TempDir tmp("levels");
  json cfg = {{"well", {{"type", "poly_even"}, {"c2", 0.5}, {"c4", 0.0}}},
              {"window", {{"min", -3.0}, {"max", 3.0}}},
              {"h", 0.1},
              {"n_lo", 0},
              {"n_hi", 3},
              {"method", "series"}};
  const int rc = run_cli("bound-states", write_config(tmp.path, cfg), tmp.path / "out");
  REQUIRE(rc == 0);

  auto rows = read_csv(find_file(tmp.path / "out", "levels.csv"));
  REQUIRE(rows.size() == 5);
  REQUIRE(rows[0] == std::vector<std::string>{"n", "E_series", "beta", "E_shifted"});
  for (int n = 0; n <= 3; ++n) {
    const double got = std::stod(rows[std::size_t(n) + 1][1]);
    REQUIRE(std::abs(got - 0.1 * (n + 0.5)) < 1e-9);
    REQUIRE(std::stod(rows[std::size_t(n) + 1][2]) == 0.0);
  }

  auto summary = json::parse(slurp(find_file(tmp.path / "out", "summary.json")));
  REQUIRE(summary["error"] == "ok");
  REQUIRE(summary["command"] == "bound-states");
}

TEST_CASE("regime tags follow the scale exponent", "[cli]") {
  TempDir tmp("regimes");
  json cfg = {{"mu", 0.1}, {"h_list", {0.1, 0.31622776601683794, 1.0, 0.05623413251903491}}};
  const int rc = run_cli("regimes", write_config(tmp.path, cfg), tmp.path / "out");
  REQUIRE(rc == 0);

  auto rows = read_csv(find_file(tmp.path / "out", "regimes.csv"));
  REQUIRE(rows.size() == 5);
  REQUIRE(rows[1][2] == "ShortWave");
  REQUIRE(rows[2][2] == "MediumWave");
  REQUIRE(rows[3][2] == "LongWave");
  REQUIRE(rows[4][2] == "UltraShortWave");
}

TEST_CASE("numerical failures return code 3 and name the error", "[cli]") {
  TempDir tmp("caustic");
  json cfg = {{"kind", "waveguide"},
              {"mu", 0.05},
              {"h", 0.05},
              {"x_grid", {{"min", -6.0}, {"max", 6.0}, {"n", 48}}},
              {"y_grid", {{"min", -6.0}, {"max", 6.0}, {"n", 64}}},
              {"confinement", {{"type", "harmonic"}, {"omega0", 2.0}}},
              {"v_ext", {{"type", "poly_even"}, {"c2", 0.5}, {"c4", 0.0}}},
              {"packet", {{"x0", 1.5}, {"sigma", 0.3}, {"p0", 0.0}}},
              {"t_final", 2.0},
              {"n_snapshots", 5},
              {"method", "wkb"}};
  const int rc = run_cli("propagate", write_config(tmp.path, cfg), tmp.path / "out");
  REQUIRE(rc == 3);

  auto summary = json::parse(slurp(find_file(tmp.path / "out", "summary.json")));
  REQUIRE(summary["error"] == "CausticEncountered");
  REQUIRE(find_file(tmp.path / "out", "density.csv").empty());
}

TEST_CASE("unknown configuration keys are rejected", "[cli]") {
  TempDir tmp("badkey");
  json cfg = {{"mu", 0.1}, {"h_list", {0.1}}, {"extra_knob", 7}};
  const int rc = run_cli("regimes", write_config(tmp.path, cfg), tmp.path / "out");
  REQUIRE(rc == 2);

  auto summary = json::parse(slurp(find_file(tmp.path / "out", "summary.json")));
  const std::string err = summary["error"].get<std::string>();
  REQUIRE(err.find("ValidationError") == 0);
  REQUIRE(err.find("extra_knob") != std::string::npos);
}

TEST_CASE("reruns of one configuration are byte-identical", "[cli]") {
  TempDir tmp("determinism");
  json cfg = {{"well", {{"type", "gaussian"}, {"height", -0.8}, {"center", 0.0}, {"width", 1.2}}},
              {"window", {{"min", -6.0}, {"max", 6.0}}},
              {"h", 0.2},
              {"n_lo", 0},
              {"n_hi", 1},
              {"method", "both"},
              {"x_nodes", 801},
              {"transport_c", 0.4}};
  const fs::path config = write_config(tmp.path, cfg);
  REQUIRE(run_cli("bound-states", config, tmp.path / "a") == 0);
  REQUIRE(run_cli("bound-states", config, tmp.path / "b") == 0);

  const std::string csv_a = slurp(find_file(tmp.path / "a", "levels.csv"));
  const std::string csv_b = slurp(find_file(tmp.path / "b", "levels.csv"));
  REQUIRE(!csv_a.empty());
  REQUIRE(csv_a == csv_b);

  auto sa = json::parse(slurp(find_file(tmp.path / "a", "summary.json")));
  auto sb = json::parse(slurp(find_file(tmp.path / "b", "summary.json")));
  REQUIRE(sa["config_hash"] == sb["config_hash"]);
}

TEST_CASE("the validate command reports per-criterion verdicts", "[cli]") {
  TempDir tmp("validate");
  json cfg = {{"criteria", {9}}};
  const int rc = run_cli("validate", write_config(tmp.path, cfg), tmp.path / "out");
  REQUIRE(rc == 0);

  auto rows = read_csv(find_file(tmp.path / "out", "criteria.csv"));
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0] == std::vector<std::string>{"id", "name", "pass", "seconds"});
  REQUIRE(rows[1][0] == "9");
  REQUIRE(rows[1][1] == "scattering");
  REQUIRE(rows[1][2] == "1");

  auto summary = json::parse(slurp(find_file(tmp.path / "out", "summary.json")));
  REQUIRE(summary["all_pass"].get<bool>());
}