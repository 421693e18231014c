#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <variant>

#include "vusc/errors.hpp"
#include "vusc/fit.hpp"
#include "vusc/modes.hpp"

using namespace vusc;
namespace fs = std::filesystem;

namespace {

HopfieldParams base() {
  HopfieldParams p;
  p.omega_nu = 1981.383;
  p.n_b = 1.46;
  p.alpha = 1.012;
  return p;
}

DispersionDataset synth(double omega_R, Model model, std::vector<int> orders, double step) {
  auto p = base();
  p.omega_R = omega_R;
  DispersionDataset d;
  for (const int m : orders) {
    for (double l = 2.0; l <= 20.0; l += step) {
      for (const int sign : {-1, 1}) {
        const double e = branch_sample(p, ControlKind::thickness, l, m, sign, model).state.energy;
        if (e > 1500 && e < 2500) d.observations.push_back({l, ControlKind::thickness, m, sign, e, 0});
      }
    }
  }
  return d;
}

fs::path write_tmp(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("chi2 vanishes at the generating parameters") {
  const auto d = synth(240, Model::full, {3, 4, 5}, 1.0);
  auto p = base();
  p.omega_R = 240;
  CHECK(chi2(d, p, Model::full) < 1e-18);
  CHECK(chi2(d, p, Model::rwa) > 1.0);
}

TEST_CASE("Rabi fit recovers the generating coupling") {
  const auto d = synth(180, Model::full, {3, 4, 5, 6}, 1.0);
  REQUIRE(d.observations.size() > 20);
  const auto r = fit_rabi(d, base(), Model::full);
  CHECK(r.converged);
  CHECK(r.value("omega_R") == doctest::Approx(180).epsilon(1e-6));
  CHECK(r.value("D") == doctest::Approx(r.value("omega_R") * r.value("omega_R") / 1981.383));
  CHECK(r.variant == Model::full);

  const auto rwa = fit_rabi(d, base(), Model::rwa);
  CHECK(rwa.chi2 >= 10 * r.chi2);
  CHECK(rwa.chi2 > 100.0);
}

TEST_CASE("RWA data are fitted exactly by the RWA model") {
  const auto d = synth(120, Model::rwa, {4, 5}, 0.5);
  const auto r = fit_rabi(d, base(), Model::rwa);
  CHECK(r.value("omega_R") == doctest::Approx(120).epsilon(1e-6));
}

TEST_CASE("a bracket that excludes the optimum is an error") {
  const auto d = synth(240, Model::full, {4}, 1.0);
  RabiFitOptions opt;
  opt.lo = 1;
  opt.hi = 100;
  opt.grid_points = 50;
  CHECK_THROWS_AS(fit_rabi(d, base(), Model::full, opt), BracketError);
  CHECK_THROWS_AS(fit_rabi(DispersionDataset{}, base(), Model::full), InsufficientDataError);
}

TEST_CASE("observations the model cannot place are named") {
  auto d = synth(240, Model::full, {4}, 2.0);
  auto p = base();
  p.omega_R = 240;
  p.orders = {3, 5};
  try {
    chi2(d, p, Model::full);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("order 4") != std::string::npos);
  }
}

TEST_CASE("dataset csv round trip and line-numbered errors") {
  const auto d = synth(240, Model::full, {4}, 2.0);
  const auto p = write_tmp("vusc_dataset.csv", "# generated\n" + dataset_to_csv(d));
  const auto back = read_dataset_csv(p.string());
  REQUIRE(back.observations.size() == d.observations.size());
  for (std::size_t i = 0; i < d.observations.size(); ++i) {
    CHECK(back.observations[i].energy == d.observations[i].energy);
    CHECK(back.observations[i].sign == d.observations[i].sign);
    CHECK(back.observations[i].line == i + 3);
  }

  const auto bad = write_tmp("vusc_bad_dataset.csv",
                             "control,control_kind,order,sign,energy_cm-1\n5.0,thickness,4,-,1800\n"
                             "6.0,thickness,4,?,1850\n");
  try {
    read_dataset_csv(bad.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("vusc_bad_dataset.csv:3") != std::string::npos);
  }
  const auto hdr = write_tmp("vusc_bad_header.csv", "a,b,c,d,e\n5.0,thickness,4,-,1800\n");
  CHECK_THROWS_AS(read_dataset_csv(hdr.string()), ParseError);
  const auto kind = write_tmp("vusc_bad_kind.csv",
                              "control,control_kind,order,sign,energy_cm-1\n5.0,pressure,4,-,1800\n");
  CHECK_THROWS_AS(read_dataset_csv(kind.string()), ParseError);
  for (const auto& f : {p, bad, hdr, kind}) fs::remove(f);
}

TEST_CASE("fit report layout") {
  FitResult r;
  r.parameters = {{"omega_R", 240.5, "cm^-1"}, {"alpha", 1.01, ""}};
  r.chi2 = 0.25;
  r.variant = Model::rwa;
  r.converged = true;
  r.evaluations = 12;
  const auto s = format_report(r, "demo");
  CHECK(s.find("[fit]\ntitle = demo\nmodel_variant = rwa\nconverged = true\n") == 0);
  CHECK(s.find("chi2 = 0.25\n") != std::string::npos);
  CHECK(s.find("[parameters]\nomega_R = 240.5 ; cm^-1\nalpha = 1.01\n") != std::string::npos);
  CHECK_THROWS_AS(r.value("missing"), ContractError);
}

TEST_CASE("material fit recovers a single oscillator") {
  const LorentzSet truth{1.40, {{"a", 1.0e5, 2000.0, 10.0}}};
  const auto grid = Grid{1900, 2100, 0.5}.samples();
  const auto measured = cell_spectrum(truth, 2.0, presets::baf2(), grid);
  MaterialFitInit init{{1.43, {{"a", 1.2e5, 2004.0, 12.0}}}, 2.1};
  MaterialFitOptions opt;
  opt.restarts = 2;
  const auto fit = fit_material(measured, 1, init, default_bounds(init), opt);
  CHECK(fit.result.converged);
  CHECK(fit.set.n_b == doctest::Approx(1.40).epsilon(1e-5));
  CHECK(fit.set.oscillators[0].f == doctest::Approx(1.0e5).epsilon(1e-4));
  CHECK(fit.set.oscillators[0].k0 == doctest::Approx(2000.0).epsilon(1e-7));
  CHECK(fit.set.oscillators[0].gamma == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(fit.cell_length_um == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(fit.result.value("k0_a") == fit.set.oscillators[0].k0);
  CHECK(fit.result.value("l_cell") == fit.cell_length_um);
}

TEST_CASE("material fit on a noisy seven-line cell") {
  const auto truth = std::get<LorentzSet>(presets::iron_pentacarbonyl().model);
  auto measured = cell_spectrum(truth, 2.0, presets::baf2(), Grid{1800, 2200, 0.5}.samples());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.005);
  measured = measured.transformed([&](double v) { return v * (1.0 + noise(rng)); });

  // start from a deliberately detuned guess
  MaterialFitInit init{truth, 2.1};
  init.set.n_b = 1.44;
  for (auto& o : init.set.oscillators) {
    o.f *= 1.1;
    o.gamma *= 1.15;
    o.k0 += 1.5;
  }
  MaterialFitOptions opt;
  opt.restarts = 2;
  opt.max_iterations = 6000;
  const auto fit = fit_material(measured, truth.oscillators.size(), init, default_bounds(init), opt);
  DispersiveMaterial fitted{"fit", fit.set};
  const double peak = absorption_band(fitted, 1900, 2100).center;
  CHECK(std::abs(peak - absorption_band(presets::iron_pentacarbonyl(), 1900, 2100).center) <= 5.0);
  CHECK(fit.cell_length_um == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("material fit contracts") {
  MaterialFitInit init{{1.43, {{"a", 1.2e5, 2004.0, 12.0}}}, 2.1};
  const auto measured = cell_spectrum(init.set, 2.1, presets::baf2(), Grid{1900, 2100, 1}.samples());
  CHECK_THROWS_AS(fit_material(measured, 2, init, default_bounds(init)), ContractError);
  auto b = default_bounds(init);
  b.k0[0] = {2010, 2020};
  CHECK_THROWS_AS(fit_material(measured, 1, init, b), ContractError);
  MaterialFitOptions opt;
  opt.window = presets::iron_pentacarbonyl();
  CHECK_THROWS_AS(fit_material(measured, 1, init, default_bounds(init), opt), ContractError);
}

TEST_CASE("cell spectrum is the window/liquid/window stack") {
  const auto fe = presets::iron_pentacarbonyl();
  const auto grid = Grid{1950, 2010, 3}.samples();
  const auto a = cell_spectrum(std::get<LorentzSet>(fe.model), 2.0, presets::baf2(), grid);
  const Stack st{presets::baf2(), {{fe, 2.0}}, presets::baf2(), {}};
  const auto b = transmission_spectrum(st, grid, 0, Polarization::s);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-13));
}

TEST_CASE("cavity length fit") {
  CavityTemplate t;
  t.fill = presets::iron_pentacarbonyl();
  t.mirror = {presets::gold_film(13.0), 13.0};
  const auto measured = transmission_spectrum(make_cavity_stack(t, 6.85), Grid{1500, 2500, 1.0}.samples(), 0,
                                              Polarization::unpolarized);
  const auto from_far = fit_cavity_length(measured, t, 6.0);
  CHECK(from_far.result.converged);
  CHECK(from_far.length_um == doctest::Approx(6.85).epsilon(1e-7));
  CHECK(from_far.alpha == doctest::Approx(1.0127).epsilon(1e-4));
  CHECK(from_far.fsr == doctest::Approx(1.0 / (2 * 1.46 * from_far.alpha * from_far.length_um * 1e-4)).epsilon(1e-12));

  const auto at_truth = fit_cavity_length(measured, t, 6.85);
  CHECK(at_truth.result.converged);
  CHECK(at_truth.result.evaluations <= 5);
  CHECK(at_truth.length_um == 6.85);
}

}
