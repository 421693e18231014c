#include "vusc/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "vusc/errors.hpp"
#include "vusc/parallel.hpp"
#include "vusc/tmm.hpp"
#include "vusc/units.hpp"

namespace vusc {

void CavityGeometry::validate() const {
  if (!(length_um > 0.0)) throw ContractError(fmt::format("length must be > 0 (got {})", length_um));
  if (!(alpha >= 1.0)) throw ContractError(fmt::format("alpha must be >= 1 (got {})", alpha));
  vusc::validate(fill);
  vusc::validate(backing);
  if (!perfect_mirror) vusc::validate(mirror);
}

double mirror_phase(const CavityGeometry& g, double k) {
  if (g.perfect_mirror) return 0.0;
  const cplx r = reflection_amplitude(eval_index(g.fill, k), {eval_index(g.mirror.material, k)},
                                      {units::nm_to_um(g.mirror.thickness_nm)},
                                      eval_index(g.backing, k), k);
  return std::arg(-r);
}

double round_trip_phase(const CavityGeometry& g, double k) {
  const double n = eval_index(g.fill, k).real();
  return 2.0 * units::phase_per_um(k) * n * g.length_um + 2.0 * mirror_phase(g, k);
}

Spectrum phase_curve(const CavityGeometry& g, const std::vector<double>& grid) {
  std::vector<double> v(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { v[i] = round_trip_phase(g, grid[i]); });
  return Spectrum(grid, std::move(v));
}

const char* to_string(Branch b) {
  switch (b) {
    case Branch::lower: return "-";
    case Branch::upper: return "+";
    case Branch::bare: return "bare";
  }
  return "?";
}

std::string ModeSolution::label() const {
  if (branch == Branch::bare) return fmt::format("M{}", order);
  return fmt::format("P{}{}", order, to_string(branch));
}

AbsorptionBand fill_band(const DispersiveMaterial& fill, double lo, double hi) {
  if (const auto* s = std::get_if<LorentzSet>(&fill.model); s && !s->oscillators.empty()) {
    const auto strongest = std::max_element(
        s->oscillators.begin(), s->oscillators.end(),
        [](const auto& a, const auto& b) { return a.f / a.gamma < b.f / b.gamma; });
    const double half = 50.0 * strongest->gamma;
    return absorption_band(fill, std::max(1.0, strongest->k0 - half), strongest->k0 + half);
  }
  return absorption_band(fill, lo, hi);
}

std::vector<ModeSolution> find_resonances(const CavityGeometry& g, const ModeSearch& search) {
  g.validate();
  if (!(search.k_lo > 0.0) || !(search.k_hi > search.k_lo)) {
    throw ContractError(fmt::format("bad search range [{}, {}]", search.k_lo, search.k_hi));
  }
  if (!(search.scan_step > 0.0)) throw ContractError("scan step must be > 0");
  for (const int m : search.orders) {
    if (m < 1) throw ContractError(fmt::format("mode order must be >= 1 (got {})", m));
  }

  const bool dispersive = is_dispersive(g.fill);
  AbsorptionBand band;
  if (dispersive) band = search.band ? *search.band : fill_band(g.fill, search.k_lo, search.k_hi);

  const auto grid = Grid{search.k_lo, search.k_hi, search.scan_step}.samples();
  std::vector<double> phi(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { phi[i] = round_trip_phase(g, grid[i]); });

  std::vector<int> orders = search.orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

  constexpr double kTol = 1e-6;
  std::vector<ModeSolution> out;
  for (const int m : orders) {
    const double target = units::kTwoPi * m;
    auto f = [&](double k) { return round_trip_phase(g, k) - target; };
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double f0 = phi[i] - target;
      const double f1 = phi[i + 1] - target;
      // A jump larger than pi is a wrap of the mirror phase, not a root.
      if (std::abs(phi[i + 1] - phi[i]) > units::kPi) continue;
      double root;
      if (f0 == 0.0) {
        root = grid[i];
      } else if (f0 * f1 < 0.0) {
        double lo = grid[i], hi = grid[i + 1], flo = f0;
        root = 0.5 * (lo + hi);
        bool ok = false;
        for (int it = 0; it < 200; ++it) {
          root = 0.5 * (lo + hi);
          const double fm = f(root);
          if (std::abs(fm) < kTol) {
            ok = true;
            break;
          }
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = root;
            flo = fm;
          } else {
            hi = root;
          }
          if (hi - lo <= 1e-13 * hi) break;
        }
        if (!ok) {
          throw NumericError(fmt::format(
              "bisection for order {} did not reach {} rad within bracket [{}, {}]", m, kTol,
              grid[i], grid[i + 1]));
        }
      } else {
        continue;
      }
      ModeSolution s;
      s.order = m;
      s.k = root;
      if (dispersive) {
        s.branch = root < band.center ? Branch::lower : Branch::upper;
        s.overdamped = std::abs(root - band.center) <= band.fwhm;
      }
      out.push_back(s);
    }
  }
  std::sort(out.begin(), out.end(), [](const ModeSolution& a, const ModeSolution& b) {
    return a.order != b.order ? a.order < b.order : a.k < b.k;
  });
  return out;
}

FsrEstimate measure_fsr(const Spectrum& s, double lo, double hi, double min_prominence) {
  const auto w = s.window(lo, hi);
  if (w.size() < 5) {
    throw InsufficientDataError(fmt::format("window [{}, {}] holds {} samples", lo, hi, w.size()));
  }
  const double prom = min_prominence < 0.0 ? default_prominence(w) : min_prominence;
  const auto peaks = detect_peaks(w, prom);
  if (peaks.size() < 3) {
    throw InsufficientDataError(
        fmt::format("FSR needs >= 3 peaks in [{}, {}], found {}", lo, hi, peaks.size()));
  }
  FsrEstimate e;
  for (const auto& p : peaks) e.peaks.push_back(p.center);
  std::vector<double> gaps(e.peaks.size() - 1);
  for (std::size_t i = 0; i + 1 < e.peaks.size(); ++i) gaps[i] = e.peaks[i + 1] - e.peaks[i];
  e.fsr = std::accumulate(gaps.begin(), gaps.end(), 0.0) / double(gaps.size());
  double ss = 0.0;
  for (const double gap : gaps) ss += (gap - e.fsr) * (gap - e.fsr);
  e.stddev = std::sqrt(ss / double(gaps.size()));
  return e;
}

double thickness_from_fsr(double fsr, double n_b, double alpha) {
  if (!(fsr > 0.0) || !(n_b > 0.0) || !(alpha > 0.0)) {
    throw ContractError(
        fmt::format("thickness_from_fsr needs positive inputs (fsr {}, n_b {}, alpha {})", fsr, n_b,
                    alpha));
  }
  return units::cm_to_um(1.0 / (2.0 * alpha * n_b * fsr));
}

double alpha_from_fsr(double fsr, double n_b, double length_um) {
  if (!(length_um > 0.0)) throw ContractError("length must be > 0");
  return thickness_from_fsr(fsr, n_b, 1.0) / length_um;
}

}  // namespace vusc
