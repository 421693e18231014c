#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vusc/hopfield.hpp"
#include "vusc/materials.hpp"
#include "vusc/peaks.hpp"
#include "vusc/spectrum.hpp"
#include "vusc/tmm.hpp"

namespace vusc {

struct NamedValue {
  std::string name;
  double value = 0.0;
  std::string unit;
};

struct FitResult {
  std::vector<NamedValue> parameters;
  double chi2 = 0.0;
  std::optional<Model> variant;
  bool converged = false;
  std::size_t evaluations = 0;
  std::string message;

  /// Value of a named parameter; ContractError if absent.
  double value(const std::string& name) const;
};

/// INI-style report: a [fit] section with chi2, evaluations, convergence and
/// a [parameters] section of `name = value ; unit` lines.
std::string format_report(const FitResult& r, const std::string& title);

// --- material fit -------------------------------------------------------------

struct ParamBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct MaterialFitInit {
  LorentzSet set;
  double cell_length_um = 0.0;
};

struct MaterialBounds {
  ParamBounds n_b;
  std::vector<ParamBounds> f, k0, gamma;  // one entry per oscillator
  ParamBounds cell_length_um;
};

/// Box around an initial guess: f in [0, 3f], k0 within +-(5 gamma + 20),
/// gamma in [gamma/5, 5 gamma], n_b in [1, 1.25 n_b], length +-20%.
MaterialBounds default_bounds(const MaterialFitInit& init);

struct MaterialFitOptions {
  DispersiveMaterial window = presets::baf2();
  std::size_t restarts = 4;
  std::uint64_t seed = 1;
  std::size_t max_iterations = 20000;  // per local search
  double simplex_tolerance = 1e-9;     // on the transformed coordinates
};

struct MaterialFit {
  LorentzSet set;
  double cell_length_um = 0.0;
  FitResult result;
};

/// Least squares of transmittance residuals of a window/liquid/window cell
/// over {n_b, f_j, k0_j, gamma_j, l_cell}. Nelder-Mead on a sine-bounded
/// transform, first from `init`, then from seeded perturbations of the best.
MaterialFit fit_material(const Spectrum& measured, std::size_t n_oscillators,
                         const MaterialFitInit& init, const MaterialBounds& bounds,
                         const MaterialFitOptions& options = {});

/// Transmittance of the cell used by fit_material.
Spectrum cell_spectrum(const LorentzSet& set, double cell_length_um,
                       const DispersiveMaterial& window, const std::vector<double>& grid);

// --- dispersion data and the Rabi fit -----------------------------------------

struct Observation {
  double control = 0.0;
  ControlKind kind = ControlKind::thickness;
  int order = 0;
  int sign = 0;  // -1 lower, +1 upper
  double energy = 0.0;
  std::size_t line = 0;  // source line, 0 when generated in memory

  std::string describe() const;
};

struct DispersionDataset {
  std::vector<Observation> observations;
};

/// CSV columns control,control_kind,order,sign,energy_cm-1; sign is + or -.
DispersionDataset read_dataset_csv(const std::string& path);
std::string dataset_to_csv(const DispersionDataset& d);

/// Model energies for every observation, in dataset order.
std::vector<double> predict(const DispersionDataset& d, const HopfieldParams& p, Model model);

/// Sum of squared residuals E - E_model. DataError for an observation the
/// model cannot resolve.
double chi2(const DispersionDataset& d, const HopfieldParams& p, Model model);

struct RabiFitOptions {
  double lo = 1.0;
  double hi = 600.0;
  std::size_t grid_points = 1000;  // oracle grid over [lo, hi]
};

/// One-dimensional minimization of chi2 over omega_R (Brent on the grid
/// cell around the grid minimum). BracketError when the grid minimum sits on
/// an end of the bracket. Not converged when the grid beats the optimum.
FitResult fit_rabi(const DispersionDataset& d, const HopfieldParams& base, Model model,
                   const RabiFitOptions& options = {});

// --- cavity length ---------------------------------------------------------------

struct CavityTemplate {
  DispersiveMaterial entry = presets::znse();
  DispersiveMaterial exit = presets::znse();
  MetalMirror mirror;
  DispersiveMaterial fill;
  WindowCorrection window;
  double angle_deg = 0.0;
  Polarization polarization = Polarization::unpolarized;
};

Stack make_cavity_stack(const CavityTemplate& t, double length_um);

struct LengthFitOptions {
  double scan_lo = 0.5;      // scan range as fractions of the initial length
  double scan_hi = 1.5;
  double scan_step_um = 0.02;
  double fsr_lo = 5000.0;    // non-dispersive window used for the FSR
  double fsr_hi = 7000.0;
  double fsr_step = 0.5;
};

struct LengthFit {
  double length_um = 0.0;
  double fsr = 0.0;
  double fsr_stddev = 0.0;
  double alpha = 0.0;
  FitResult result;
};

LengthFit fit_cavity_length(const Spectrum& measured, const CavityTemplate& t, double init_length_um,
                            const LengthFitOptions& options = {});

}  // namespace vusc
