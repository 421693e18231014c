// Writes the synthetic inputs under data/examples: a noisy flow-cell
// spectrum, a cavity spectrum and a thickness-dispersion dataset.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <fmt/format.h>

#include "vusc/csv.hpp"
#include "vusc/fit.hpp"
#include "vusc/hopfield.hpp"
#include "vusc/materials.hpp"
#include "vusc/modes.hpp"
#include "vusc/tmm.hpp"

namespace fs = std::filesystem;
using namespace vusc;

namespace {

void write(const fs::path& p, const std::string& comment, const std::string& body) {
  std::ofstream out(p);
  csv::write_comments(out, {comment});
  out << body;
  std::cout << p.string() << '\n';
}

std::string spectrum_body(const Spectrum& s) {
  std::string b = "wavenumber_cm-1,transmittance\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    b += fmt::format("{},{}\n", csv::format_double(s.wavenumbers()[i]), csv::format_double(s.values()[i]));
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "data/examples";
  fs::create_directories(dir);
  const auto fill = presets::iron_pentacarbonyl();

  // 2 um cell between BaF2 windows, 0.5% relative noise
  {
    Stack cell{presets::baf2(), {{fill, 2.0}}, presets::baf2(), {}};
    auto s = transmission_spectrum(cell, Grid{1800, 2200, 0.5}.samples(), 0.0, Polarization::unpolarized);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.005);
    s = s.transformed([&](double v) { return v * (1.0 + noise(rng)); });
    write(dir / "cell_spectrum.csv", "synthetic: 2.00 um Fe(CO)5 cell, BaF2 windows, 0.5% noise, rng seed 7",
          spectrum_body(s));
  }

  {
    CavityTemplate t;
    t.fill = fill;
    t.mirror = {presets::gold_film(13.0), 13.0};
    const auto s = transmission_spectrum(make_cavity_stack(t, 6.85), Grid{1500, 2500, 0.5}.samples(), 0.0,
                                         Polarization::unpolarized);
    write(dir / "cavity_spectrum.csv", "synthetic: 6.85 um Fe(CO)5 cavity, 13 nm Au film mirrors", spectrum_body(s));
  }

  {
    HopfieldParams p;
    p.omega_nu = fill_band(fill, 1000.0, 3000.0).center;
    p.omega_R = 240.0;
    p.n_b = 1.46;
    p.alpha = 1.012;
    DispersionDataset d;
    for (int m = 1; m <= 10; ++m) {
      for (int i = 0; i <= 48; ++i) {
        const double l = 1.0 + 0.5 * i;
        for (const int sign : {-1, +1}) {
          p.orders = {m};
          const auto b = branch_sample(p, ControlKind::thickness, l, m, sign, Model::full);
          if (b.state.energy < 1500.0 || b.state.energy > 2500.0) continue;
          d.observations.push_back({l, ControlKind::thickness, m, sign, b.state.energy, 0});
        }
      }
    }
    write(dir / "thickness_dispersion.csv",
          fmt::format("synthetic: full model, omega_R 240, omega_nu {}, n_b 1.46, alpha 1.012", p.omega_nu),
          dataset_to_csv(d));
  }
}
