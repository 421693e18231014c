#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <variant>

#include "vusc/errors.hpp"
#include "vusc/materials.hpp"
#include "vusc/units.hpp"

using namespace vusc;
namespace fs = std::filesystem;

namespace {

DispersiveMaterial one_oscillator(double n_b, double f, double k0, double gamma) {
  return {"single", LorentzSet{n_b, {{"a", f, k0, gamma}}}, {1.0, 0.0}};
}

std::string expect_parse_error(const std::string& text) {
  try {
    parse_material(text, "mem.json");
  } catch (const ParseError& e) {
    return e.what();
  }
  FAIL("expected ParseError");
  return {};
}

}  // namespace

TEST_SUITE("materials") {

TEST_CASE("lorentz index at line centre has closed form") {
  // eps(k0) = n_b^2 + i f / (k0 gamma)
  const double n_b = 1.3, f = 4e4, k0 = 2000, g = 10;
  const auto m = one_oscillator(n_b, f, k0, g);
  const cplx eps{n_b * n_b, f / (k0 * g)};
  const cplx n = eval_index(m, k0);
  CHECK(n.real() == doctest::Approx(std::sqrt(eps).real()).epsilon(1e-13));
  CHECK(n.imag() == doctest::Approx(std::sqrt(eps).imag()).epsilon(1e-13));
}

TEST_CASE("lorentz index approaches n_b far from resonance and stays passive") {
  const auto m = one_oscillator(1.46, 3e5, 1980, 5.31);
  CHECK(eval_index(m, 1e7).real() == doctest::Approx(1.46).epsilon(1e-6));
  for (double k = 1500; k < 2500; k += 0.7) CHECK(eval_index(m, k).imag() >= 0.0);
}

TEST_CASE("passive_sqrt picks the root with non-negative imaginary part") {
  for (cplx e : {cplx{-4, 0}, cplx{-4, -1e-12}, cplx{3, -2}, cplx{-1, 5}}) {
    const auto n = passive_sqrt(e);
    CHECK(n.imag() >= 0.0);
    CHECK(std::abs(n * n - e) < 1e-12);
  }
}

TEST_CASE("drude term matches the free-electron permittivity") {
  DrudeLorentz d{1.0, 9.0, {{"drude", 1.0, 0.0, 0.05}}};
  const DispersiveMaterial m{"drude", d, {1.0, 0.0}};
  const double k = 2000.0;
  const double w = k / units::kWavenumberPerEv;
  const cplx eps = 1.0 - 81.0 / (w * w + cplx{0.0, w * 0.05});
  const auto n = eval_index(m, k);
  CHECK(std::abs(n * n - eps) < 1e-9 * std::abs(eps));
  CHECK(n.imag() > 0.0);
}

TEST_CASE("gold is a good metal in the mid infrared") {
  const auto n = eval_index(presets::gold_bulk(), 2000.0);
  CHECK(n.imag() > 10.0);
  CHECK((n * n).real() < -500.0);
}

TEST_CASE("film correction adds hbar v_F / d to the Drude damping") {
  const auto bulk = std::get<DrudeLorentz>(presets::gold_bulk().model);
  const auto film = std::get<DrudeLorentz>(presets::gold_film(13.0).model);
  const double extra = units::ev_to_wavenumber(film.terms[0].gamma - bulk.terms[0].gamma);
  CHECK(extra == doctest::Approx(571.7).epsilon(1e-3));
  for (std::size_t i = 1; i < bulk.terms.size(); ++i) CHECK(film.terms[i].gamma == bulk.terms[i].gamma);
  DrudeLorentz no_drude{1.0, 9.0, {{"l", 1.0, 1.0, 0.1}}};
  CHECK_THROWS_AS(with_film_damping(no_drude, 13.0, 1.4e6), ContractError);
}

TEST_CASE("Fe(CO)5 extinction band") {
  const auto b = absorption_band(presets::iron_pentacarbonyl(), 1900, 2100);
  CHECK(b.center == doctest::Approx(1981.383).epsilon(2e-6));
  CHECK(b.peak_kappa == doctest::Approx(4.10).epsilon(0.01));
  CHECK(b.fwhm == doctest::Approx(12.40).epsilon(0.01));
  CHECK(std::abs(b.center - 1980.0) <= 15.0);
  CHECK_THROWS_AS(absorption_band(presets::znse(), 1900, 2100), DomainError);
  CHECK_THROWS_AS(absorption_band(presets::znse(), 2100, 1900), ContractError);
}

TEST_CASE("Fe(CO)5 document lists seven oscillators") {
  const auto m = load_material(VUSC_DATA_DIR "/materials/fe_co5_liquid.json");
  const auto* set = std::get_if<LorentzSet>(&m.model);
  REQUIRE(set);
  CHECK(set->oscillators.size() == 7);
  CHECK(set->n_b == doctest::Approx(1.46));
}

TEST_CASE("index_scale multiplies the evaluated index") {
  auto m = presets::iron_pentacarbonyl();
  const auto n0 = eval_index(m, 2050);
  m.index_scale = {1.0, 0.1};
  const auto n1 = eval_index(m, 2050);
  CHECK(std::abs(n1 - n0 * cplx{1.0, 0.1}) < 1e-14);
}

TEST_CASE("bad wavenumbers are rejected") {
  CHECK_THROWS_AS(eval_index(presets::znse(), 0.0), DomainError);
  CHECK_THROWS_AS(eval_index(presets::znse(), -5.0), DomainError);
  CHECK_THROWS_AS(eval_index(presets::znse(), NAN), DomainError);
}

TEST_CASE("shipped material documents equal the presets") {
  const fs::path dir = VUSC_DATA_DIR "/materials";
  const std::vector<std::pair<std::string, DispersiveMaterial>> cases{
      {"fe_co5_liquid.json", presets::iron_pentacarbonyl()},
      {"au_rakic_ld.json", presets::gold_bulk()},
      {"au_film_13nm.json", presets::gold_film(13.0)},
      {"znse.json", presets::znse()},
      {"baf2.json", presets::baf2()},
  };
  for (const auto& [file, preset] : cases) {
    CAPTURE(file);
    const auto m = load_material((dir / file).string());
    CHECK(m.name == preset.name);
    for (double k : {1000.0, 1981.0, 2400.0, 6000.0}) {
      CHECK(std::abs(eval_index(m, k) - eval_index(preset, k)) < 1e-12 * std::abs(eval_index(preset, k)));
    }
  }
}

TEST_CASE("material documents: errors carry a location") {
  const auto syntax = expect_parse_error("{\n  \"n_b\": 1.4,\n  oops\n}");
  CHECK(syntax.find("mem.json:3:") != std::string::npos);

  const auto unknown = expect_parse_error(R"({"name": "x", "n_b": 1.4, "colour": 3})");
  CHECK(unknown.find("colour") != std::string::npos);

  const auto dup = expect_parse_error(
      R"({"name": "x", "n_b": 1.4, "oscillators": [{"id": "a", "f": 1, "k0": 2, "gamma": 1},
                                                    {"id": "a", "f": 1, "k0": 3, "gamma": 1}]})");
  CHECK(dup.find("duplicate") != std::string::npos);

  const auto neg = expect_parse_error(
      R"({"name": "x", "n_b": 1.4, "oscillators": [{"id": "a", "f": 1, "k0": 2, "gamma": -1}]})");
  CHECK(neg.find("invariant violated") != std::string::npos);
  CHECK(neg.find("gamma") != std::string::npos);

  CHECK_THROWS_AS(parse_material(R"({"name": "m", "model": "drude_lorentz", "units": "THz",
                                     "eps_inf": 1, "omega_p": 9, "terms": []})",
                                 "mem.json"),
                  ParseError);
}

TEST_CASE("tabulated index interpolates and refuses extrapolation") {
  const auto p = fs::temp_directory_path() / "vusc_index_table.csv";
  {
    std::ofstream o(p);
    o << "wavenumber_cm-1,n,kappa\n1000,2.0,0.0\n2000,3.0,1.0\n";
  }
  const auto doc = fs::temp_directory_path() / "vusc_tabulated.json";
  {
    std::ofstream o(doc);
    o << R"({"name": "tab", "model": "tabulated", "file": "vusc_index_table.csv"})";
  }
  const auto m = load_material(doc.string());
  const auto n = eval_index(m, 1250.0);
  CHECK(n.real() == doctest::Approx(2.25));
  CHECK(n.imag() == doctest::Approx(0.25));
  CHECK_THROWS_AS(eval_index(m, 2500.0), DomainError);
  fs::remove(p);
  fs::remove(doc);
}

}
