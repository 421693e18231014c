#include <doctest.h>

#include <array>
#include <cmath>

#include "vusc/errors.hpp"
#include "vusc/fit.hpp"
#include "vusc/peaks.hpp"

using namespace vusc;

namespace {

Spectrum lorentzians(const std::vector<std::array<double, 3>>& lines, double lo, double hi, double step) {
  std::vector<double> k, v;
  for (const double x : Grid{lo, hi, step}.samples()) {
    double y = 0.0;
    for (const auto& [c, h, w] : lines) y += h / (1.0 + 4.0 * (x - c) * (x - c) / (w * w));
    k.push_back(x);
    v.push_back(y);
  }
  return {k, v};
}

}  // namespace

TEST_SUITE("peaks") {

TEST_CASE("isolated Lorentzian: centre, height and width") {
  // off-grid centre; the far tails leave a small base, so compare with the
  // analytic width at half of the prominence above that base
  const double c = 2000.37, h = 1.0, w = 8.0;
  const auto s = lorentzians({{c, h, w}}, 1800, 2200, 0.1);
  const auto p = detect_peaks(s, 0.1);
  REQUIRE(p.size() == 1);
  CHECK(p[0].center == doctest::Approx(c).epsilon(1e-6));
  CHECK(p[0].height == doctest::Approx(h).epsilon(1e-4));
  const double base = h / (1.0 + 4.0 * 200.37 * 200.37 / (w * w));
  const double half = base + 0.5 * (h - base);
  const double fwhm = w * std::sqrt(h / half - 1.0);
  CHECK(p[0].fwhm == doctest::Approx(fwhm).epsilon(2e-3));
  CHECK(p[0].prominence == doctest::Approx(h - base).epsilon(1e-4));
}

TEST_CASE("prominence threshold separates a shoulder from a peak") {
  const auto s = lorentzians({{1950, 1.0, 10.0}, {2050, 0.05, 10.0}}, 1800, 2200, 0.25);
  CHECK(detect_peaks(s, 0.01).size() == 2);
  CHECK(detect_peaks(s, 0.1).size() == 1);
  CHECK(default_prominence(s) == doctest::Approx(0.05 * (s.values()[400] - 0.0)).epsilon(0.05));
}

TEST_CASE("flat tops count once at their midpoint") {
  const Spectrum s({1, 2, 3, 4, 5, 6, 7, 8}, {0, 1, 3, 3, 3, 1, 0, 0});
  const auto p = detect_peaks(s, 0.5);
  REQUIRE(p.size() == 1);
  CHECK(p[0].center == doctest::Approx(4.0));
  CHECK(p[0].index == 3);
}

TEST_CASE("filled cavity shows the full ladder") {
  CavityTemplate t;
  t.fill = presets::iron_pentacarbonyl();
  t.mirror = {presets::gold_film(13.0), 13.0};
  const auto sp = transmission_spectrum(make_cavity_stack(t, 6.85), Grid{1700, 2300, 0.1}.samples(), 0,
                                        Polarization::unpolarized);
  const auto peaks = detect_peaks(sp, 5e-5);
  CHECK(peaks.size() >= 6);
  for (const auto& p : peaks) CHECK(p.fwhm > 0.0);
}

TEST_CASE("short spectra are rejected") {
  CHECK_THROWS_AS(find_peaks(Spectrum({1, 2, 3, 4}, {0, 1, 0, 0}), 0.1), ContractError);
}

TEST_CASE("monotone data has no peaks") {
  const Spectrum s({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6});
  CHECK(detect_peaks(s, 0.0).empty());
}

}
