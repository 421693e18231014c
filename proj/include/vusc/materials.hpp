#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

namespace vusc {

using cplx = std::complex<double>;

/// f / (k^2 - k0^2 + i k gamma); f in cm^-2, k0 and gamma in cm^-1.
struct LorentzOscillator {
  std::string id;
  double f = 0.0;
  double k0 = 0.0;
  double gamma = 0.0;
};

struct LorentzSet {
  double n_b = 1.0;
  std::vector<LorentzOscillator> oscillators;
};

/// One Drude (omega = 0) or Lorentz term of a metal permittivity, in eV.
struct DrudeLorentzTerm {
  std::string id;
  double f = 0.0;
  double omega = 0.0;
  double gamma = 0.0;
};

/// eps(k) = eps_inf - sum_j f_j wp^2 / (w^2 - w_j^2 + i w gamma_j), all in eV.
struct DrudeLorentz {
  double eps_inf = 1.0;
  double omega_p = 0.0;
  std::vector<DrudeLorentzTerm> terms;
};

struct ConstantIndex {
  cplx n{1.0, 0.0};
};

/// Complex index sampled on a strictly increasing wavenumber grid.
struct TabulatedIndex {
  std::vector<double> k;
  std::vector<cplx> n;
};

using MaterialModel = std::variant<ConstantIndex, LorentzSet, DrudeLorentz, TabulatedIndex>;

/// A named index model with an optional complex multiplier applied to the
/// evaluated index (default 1).
struct DispersiveMaterial {
  std::string name;
  MaterialModel model{ConstantIndex{}};
  cplx index_scale{1.0, 0.0};
};

struct MetalMirror {
  DispersiveMaterial material;
  double thickness_nm = 0.0;
};

/// Throws ContractError naming the offending field when an invariant fails.
void validate(const DispersiveMaterial& m);
void validate(const MetalMirror& m);

/// Complex refractive index at wavenumber k (cm^-1), Im >= 0.
/// DomainError for k <= 0 or k outside a tabulated range.
cplx eval_index(const DispersiveMaterial& m, double k);

/// Principal square root of eps with the sign chosen so that Im >= 0.
cplx passive_sqrt(cplx eps);

/// True when the index varies with wavenumber (anything but a constant).
bool is_dispersive(const DispersiveMaterial& m);

/// Background index: n_b of a Lorentz set, Re(n) of a constant, otherwise
/// Re(index) at the upper edge of the probed range.
double background_index(const DispersiveMaterial& m);

/// Adds the surface-scattering rate hbar v_F / d to the Drude (omega = 0)
/// damping of a metal model. ContractError when there is no Drude term.
DrudeLorentz with_film_damping(DrudeLorentz model, double thickness_nm,
                               double fermi_velocity_m_per_s);

/// Extinction band of a material: maximum of Im(index) and its full width at
/// half maximum, located by a dense scan of [lo, hi].
struct AbsorptionBand {
  double center = 0.0;
  double peak_kappa = 0.0;
  double fwhm = 0.0;
};
AbsorptionBand absorption_band(const DispersiveMaterial& m, double lo, double hi,
                               double step = 0.01);

/// Reads a material document (JSON). Relative `file` entries of tabulated
/// materials resolve against the document's directory.
DispersiveMaterial load_material(const std::string& path);

/// Parses a material document already in memory; `origin` is used for
/// diagnostics and relative paths.
DispersiveMaterial parse_material(const std::string& text, const std::string& origin);

/// Reads a two- or three-column CSV: wavenumber_cm-1, n[, kappa].
TabulatedIndex read_index_table(const std::string& path);

namespace presets {

/// Seven-oscillator Fe(CO)5 liquid model, n_b = 1.46.
DispersiveMaterial iron_pentacarbonyl();
/// Bulk Au Lorentz-Drude parameters (Rakic et al. 1998).
DispersiveMaterial gold_bulk();
/// Au with the Drude damping raised by hbar v_F / d for a film of given thickness.
DispersiveMaterial gold_film(double thickness_nm = 13.0);
DispersiveMaterial znse();
DispersiveMaterial baf2();
DispersiveMaterial constant(double n, const std::string& name = "constant");

inline constexpr double kGoldFermiVelocity = 1.40e6;
inline constexpr double kFlowCellLengthUm = 2.00;

}  // namespace presets

}  // namespace vusc
