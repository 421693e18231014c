#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vusc/materials.hpp"
#include "vusc/peaks.hpp"
#include "vusc/spectrum.hpp"

namespace vusc {

/// Planar cavity: fill of length L between two identical metal mirrors, each
/// backed by a semi-infinite window medium.
struct CavityGeometry {
  double length_um = 0.0;
  DispersiveMaterial fill;
  MetalMirror mirror;
  DispersiveMaterial backing = presets::znse();
  double alpha = 1.0;
  /// Replace the metal by a perfect conductor (reflection phase 0).
  bool perfect_mirror = false;

  void validate() const;
};

/// Reflection phase of the fill/mirror/backing stack seen from the fill,
/// measured relative to a perfect conductor: arg(-r) in (-pi, pi].
double mirror_phase(const CavityGeometry& g, double k);

/// 4 pi k Re(n_fill) L + 2 phi_r, with L converted to cm.
double round_trip_phase(const CavityGeometry& g, double k);

Spectrum phase_curve(const CavityGeometry& g, const std::vector<double>& grid);

enum class Branch { lower, upper, bare };
const char* to_string(Branch b);

struct ModeSolution {
  int order = 0;
  double k = 0.0;
  Branch branch = Branch::bare;
  bool overdamped = false;

  /// "P4-", "P4+" or "M4" for a non-dispersive fill.
  std::string label() const;
};

struct ModeSearch {
  double k_lo = 0.0;
  double k_hi = 0.0;
  std::vector<int> orders;
  double scan_step = 0.25;
  /// Extinction band used for labeling; located from the fill when absent.
  std::optional<AbsorptionBand> band;
};

/// All roots of round_trip_phase(k) = 2 pi m on [k_lo, k_hi], sorted by (m, k).
std::vector<ModeSolution> find_resonances(const CavityGeometry& g, const ModeSearch& search);

/// Extinction band of a fill, searched around its strongest oscillator for a
/// Lorentz set and over [lo, hi] otherwise.
AbsorptionBand fill_band(const DispersiveMaterial& fill, double lo, double hi);

struct FsrEstimate {
  double fsr = 0.0;
  double stddev = 0.0;
  std::vector<double> peaks;
};

/// Mean spacing of adjacent transmission peaks inside [lo, hi]. A negative
/// prominence selects the default (5% of the windowed dynamic range).
FsrEstimate measure_fsr(const Spectrum& s, double lo, double hi, double min_prominence = -1.0);

/// 1 / (2 alpha n_b fsr), returned in um.
double thickness_from_fsr(double fsr, double n_b, double alpha = 1.0);

/// Ratio of the naive FSR thickness to the physical length L.
double alpha_from_fsr(double fsr, double n_b, double length_um);

}  // namespace vusc
