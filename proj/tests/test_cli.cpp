#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vusc/cli.hpp"
#include "vusc/fit.hpp"

using namespace vusc;
namespace fs = std::filesystem;

namespace {

const std::string kData = VUSC_DATA_DIR;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome vusc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "vusc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("vusc_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const std::string& p, const std::string& body) { std::ofstream(p) << body; }

std::string cell_config(const std::string& step = "1") {
  return R"({"command": "simulate",
    "stack": {"entry": ")" + kData + R"(/materials/baf2.json",
              "layers": [{"material": ")" + kData + R"(/materials/fe_co5_liquid.json", "thickness_um": 2.0}],
              "exit": "preset:baf2"},
    "grid": {"start": 1900, "stop": 2100, "step": )" + step + R"(},
    "peaks": {"prominence": 0.01}})";
}

std::size_t data_lines(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l[0] != '#') ++n;
  }
  return n;
}

std::size_t files_in(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage and help") {
  CHECK(vusc_run({"--help"}).code == cli::kOk);
  CHECK(vusc_run({"--version"}).out.find("vusc 0.1.0") != std::string::npos);
  CHECK(vusc_run({}).code == cli::kUsage);
  CHECK(vusc_run({"transmogrify"}).code == cli::kUsage);
  CHECK(vusc_run({"simulate"}).code == cli::kUsage);
  CHECK(vusc_run({"simulate", "--config", "x.json", "--threads", "many"}).code == cli::kUsage);
}

TEST_CASE("simulate writes a self-describing spectrum") {
  TempDir t("simulate");
  put(t / "cell.json", cell_config());
  const auto r = vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "out"});
  REQUIRE_MESSAGE(r.code == cli::kOk, r.err);
  const auto text = slurp(t / "out/spectrum.csv");
  CHECK(text.find("# tool: vusc 0.1.0\n# command: simulate\n# seed: 1\n# config: {") == 0);
  CHECK(text.find("\nwavenumber_cm-1,value\n") != std::string::npos);
  CHECK(data_lines(text) == 202);
  const auto peaks = slurp(t / "out/peaks.csv");
  CHECK(peaks.find("center_cm-1,height,fwhm_cm-1,prominence") != std::string::npos);
}

TEST_CASE("identical config and seed give identical bytes at any thread count") {
  TempDir t("determinism");
  put(t / "cell.json", cell_config("0.5"));
  REQUIRE(vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "a", "--threads", "1"}).code == 0);
  REQUIRE(vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "b", "--threads", "4"}).code == 0);
  CHECK(slurp(t / "a/spectrum.csv") == slurp(t / "b/spectrum.csv"));
  CHECK(slurp(t / "a/peaks.csv") == slurp(t / "b/peaks.csv"));
}

TEST_CASE("a run is reproducible from its own header") {
  TempDir t("replay");
  put(t / "cell.json", cell_config());
  REQUIRE(vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "a", "--seed", "9"}).code == 0);
  const auto first = slurp(t / "a/spectrum.csv");
  CHECK(first.find("# seed: 9\n") != std::string::npos);
  const auto at = first.find("# config: ") + 10;
  put(t / "replay.json", first.substr(at, first.find('\n', at) - at));
  REQUIRE(vusc_run({"simulate", "--config", t / "replay.json", "--out", t / "b"}).code == 0);
  CHECK(slurp(t / "b/spectrum.csv") == first);
}

TEST_CASE("missing material file: error, nothing written") {
  TempDir t("missing");
  auto cfg = cell_config();
  cfg.replace(cfg.find("fe_co5_liquid.json"), 18, "nope.json");
  put(t / "cell.json", cfg);
  const auto r = vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "out"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("stack.layers[0].material") != std::string::npos);
  CHECK(r.err.find("nope.json") != std::string::npos);
  CHECK(files_in(t.path / "out") == 0);
}

TEST_CASE("config errors name the key") {
  TempDir t("errors");
  put(t / "fm.json", R"({"command": "field-map", "stack": {"entry": "preset:znse", "exit": "preset:znse",
      "layers": [{"material": 1.46, "thickness_um": 2}]}, "grid": {"start": 1900, "stop": 2000, "step": 10},
      "z_resolution_um": 0})");
  auto r = vusc_run({"field-map", "--config", t / "fm.json", "--out", t / "out"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("z_resolution_um") != std::string::npos);

  put(t / "sw.json", R"({"command": "sweep", "hopfield": {"omega_nu": 1981, "omega_R": 240, "n_b": 1.46,
      "length_um": 6.85, "orders": [4]}, "sweep": {"kind": "angle", "values": []}})");
  r = vusc_run({"sweep", "--config", t / "sw.json", "--out", t / "out"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("sweep.values: sweep is empty") != std::string::npos);

  put(t / "grid.json", R"({"command": "simulate", "stack": {"entry": 1, "exit": 1, "layers": []},
      "grid": {"start": 1900, "stop": 2000, "step": -1}})");
  r = vusc_run({"simulate", "--config", t / "grid.json", "--out", t / "out"});
  CHECK(r.err.find("grid: step must be > 0") != std::string::npos);

  put(t / "syntax.json", "{\n \"command\": \"simulate\",\n}");
  r = vusc_run({"simulate", "--config", t / "syntax.json", "--out", t / "out"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("syntax.json:3:") != std::string::npos);

  r = vusc_run({"modes", "--config", t / "sw.json", "--out", t / "out"});
  CHECK(r.code == cli::kUsage);
  CHECK(files_in(t.path / "out") == 0);
}

TEST_CASE("environment overrides nested keys") {
  TempDir t("env");
  put(t / "cell.json", cell_config());
  setenv("VUSC_GRID__STEP", "2", 1);
  const auto r = vusc_run({"simulate", "--config", t / "cell.json", "--out", t / "out"});
  unsetenv("VUSC_GRID__STEP");
  REQUIRE(r.code == 0);
  const auto text = slurp(t / "out/spectrum.csv");
  CHECK(data_lines(text) == 102);
  CHECK(text.find("\"step\":2") != std::string::npos);
}

TEST_CASE("modes and sweeps") {
  TempDir t("modes");
  put(t / "modes.json", R"({"command": "modes", "geometry": {"length_um": 6.85,
      "fill": "preset:fe_co5_liquid", "mirror": {"material": "preset:au_film_13nm", "thickness_nm": 13}},
      "range": {"start": 1600, "stop": 2400}, "orders": [4, 5]})");
  auto r = vusc_run({"modes", "--config", t / "modes.json", "--out", t / "out"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto modes = slurp(t / "out/modes.csv");
  CHECK(modes.find("order,branch,wavenumber_cm-1,overdamped\n") != std::string::npos);
  CHECK(modes.find("4,P4-,1753.") != std::string::npos);
  CHECK(modes.find(",true\n") != std::string::npos);
  CHECK(data_lines(slurp(t / "out/phase.csv")) == 1602);

  put(t / "sweep.json", R"({"command": "sweep", "model": "full", "hopfield": {"omega_nu":
      {"from_material": "preset:fe_co5_liquid"}, "omega_R": 240, "n_b": 1.46, "length_um": 6.85, "orders": [4]},
      "sweep": {"kind": "angle", "values": {"start": 0, "stop": 28, "step": 4}},
      "bandgap": {"detuning_lo": -1200, "detuning_hi": 1200}})");
  r = vusc_run({"sweep", "--config", t / "sweep.json", "--out", t / "out2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto br = slurp(t / "out2/branches.csv");
  CHECK(br.find("control,order,branch,energy_cm-1,photon_fraction,matter_fraction\n0,4,-,") != std::string::npos);
  CHECK(data_lines(br) == 1 + 2 * 8);
  CHECK(data_lines(slurp(t / "out2/bandgap.csv")) == 3);
}

TEST_CASE("fit-rabi reports both models") {
  TempDir t("rabi");
  HopfieldParams p;
  p.omega_nu = 1981.383;
  p.omega_R = 200;
  p.n_b = 1.46;
  DispersionDataset d;
  for (double l = 5.0; l <= 9.0; l += 0.5) {
    for (const int s : {-1, 1}) {
      d.observations.push_back(
          {l, ControlKind::thickness, 4, s, branch_sample(p, ControlKind::thickness, l, 4, s, Model::full).state.energy, 0});
    }
  }
  put(t / "data.csv", dataset_to_csv(d));
  put(t / "fit.json", R"({"command": "fit-rabi", "dataset": "data.csv",
      "hopfield": {"omega_nu": 1981.383, "n_b": 1.46}, "grid_points": 200})");
  const auto r = vusc_run({"fit-rabi", "--config", t / "fit.json", "--out", t / "out"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rep = slurp(t / "out/fit_report.txt");
  CHECK(rep.find("title = rabi fit (full)") != std::string::npos);
  CHECK(rep.find("title = rabi fit (rwa)") != std::string::npos);
  CHECK(rep.find("omega_R = 200.000") != std::string::npos);
  const auto res = slurp(t / "out/residuals.csv");
  CHECK(res.find("model,control,control_kind,order,sign,observed_cm-1,predicted_cm-1,residual_cm-1\n") !=
        std::string::npos);
  CHECK(data_lines(res) == 1 + 2 * d.observations.size());

  put(t / "data.csv", "control,control_kind,order,sign,energy_cm-1\n5,thickness,4,-,1800\n5,thickness,four,+,2100\n");
  const auto bad = vusc_run({"fit-rabi", "--config", t / "fit.json", "--out", t / "out3"});
  CHECK(bad.code == cli::kFailure);
  CHECK(bad.err.find("data.csv:3") != std::string::npos);
  CHECK(files_in(t.path / "out3") == 0);
}

TEST_CASE("an unconverged fit still writes its outputs") {
  TempDir t("material");
  put(t / "fit.json", R"({"command": "fit-material", "measured": ")" + kData +
                          R"(/examples/cell_spectrum.csv", "init": "preset:fe_co5_liquid", "cell_length_um": 2.0,
      "restarts": 0, "max_iterations": 5})");
  const auto r = vusc_run({"fit-material", "--config", t / "fit.json", "--out", t / "out"});
  CHECK(r.code == cli::kNotConverged);
  CHECK(slurp(t / "out/fit_report.txt").find("converged = false") != std::string::npos);
  CHECK(fs::exists(t.path / "out/fitted_material.json"));
  CHECK(fs::exists(t.path / "out/residuals.csv"));
}

}
