#pragma once

#include <string>
#include <vector>

#include "vusc/materials.hpp"
#include "vusc/spectrum.hpp"

namespace vusc {

struct Layer {
  DispersiveMaterial material;
  double thickness_um = 0.0;
};

/// Real amplitude factor C applied to the transmitted field of a stack, either
/// a constant or a curve C(k) read from CSV (linear interpolation).
class WindowCorrection {
 public:
  WindowCorrection() = default;
  explicit WindowCorrection(double c);
  explicit WindowCorrection(Spectrum curve);

  double at(double k) const;
  bool is_identity() const { return curve_.empty() && c_ == 1.0; }

 private:
  double c_ = 1.0;
  Spectrum curve_;
};

struct Stack {
  DispersiveMaterial entry;
  std::vector<Layer> layers;
  DispersiveMaterial exit;
  WindowCorrection window;

  double total_thickness_um() const;
  /// The same structure lit from the other side: layers in reverse order,
  /// entry and exit swapped.
  Stack reversed() const;
};

enum class Polarization { s, p, unpolarized };

Polarization parse_polarization(const std::string& s);
const char* to_string(Polarization p);

struct PlaneWaveCtx {
  double k = 0.0;          // cm^-1
  double angle_deg = 0.0;  // in the entry medium
  Polarization polarization = Polarization::s;
};

/// Amplitudes refer to the tangential electric field (E_y for s, E_x for p),
/// so s and p coincide at normal incidence. For unpolarized light r and t are
/// the s amplitudes and T, R, A are polarization averages. T and A include
/// the window correction: T = C^2 T_stack, A = A_stack + (1 - C^2) T_stack.
struct TmmResult {
  cplx r;
  cplx t;
  double T = 0.0;
  double R = 0.0;
  double A = 0.0;
  std::vector<double> layer_absorption;  // per layer, sums to A_stack
};

/// Indices of every medium at one wavenumber: entry, layers..., exit.
using IndexProfile = std::vector<cplx>;
IndexProfile index_profile(const Stack& stack, double k);

/// Throws DomainError for evanescent entry, ContractError for lossy bounding media.
TmmResult solve_stack(const Stack& stack, const PlaneWaveCtx& ctx);

/// Same as solve_stack with indices already evaluated (fast path for fits).
TmmResult solve_indices(const IndexProfile& n, const std::vector<double>& thickness_um,
                        const PlaneWaveCtx& ctx, double window_c = 1.0);

/// Reflection amplitude seen from a possibly absorbing entry medium at normal
/// incidence: b0/a0 of the tangential electric field.
cplx reflection_amplitude(cplx entry, const std::vector<cplx>& layer_index,
                          const std::vector<double>& thickness_um, cplx exit, double k);

enum class Quantity { transmittance, reflectance, absorptance };

/// Pointwise T (or R, A) over a strictly increasing grid.
Spectrum transmission_spectrum(const Stack& stack, const std::vector<double>& grid,
                               double angle_deg, Polarization pol,
                               Quantity q = Quantity::transmittance);

/// |E(z, k)|^2 for unit incident field amplitude, z from the first interface
/// (0) to the last one. values is row-major: values[ik * z.size() + iz].
struct FieldMap {
  std::vector<double> z_um;
  std::vector<double> k;
  std::vector<double> values;

  double at(std::size_t ik, std::size_t iz) const { return values[ik * z_um.size() + iz]; }
};

FieldMap field_map(const Stack& stack, const std::vector<double>& k_grid, double z_resolution_um,
                   double angle_deg, Polarization pol);

/// Field profile at a single wavenumber together with the normalized
/// z-component of the Poynting flux (1 = incident flux).
struct FieldProfile {
  std::vector<double> z_um;
  std::vector<double> intensity;
  std::vector<double> flux;
};

FieldProfile field_profile(const Stack& stack, const PlaneWaveCtx& ctx, double z_resolution_um);

}  // namespace vusc
