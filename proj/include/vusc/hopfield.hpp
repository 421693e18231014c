#pragma once

#include <array>
#include <string>
#include <vector>

#include "vusc/quartic.hpp"

namespace vusc {

enum class Model { full, rwa };
Model parse_model(const std::string& s);
const char* to_string(Model m);

/// How the light-matter coupling follows the cavity energy. The collective
/// coupling of a cavity mode grows as sqrt(omega_c); omega_R is its value at
/// omega_c = omega_nu. `constant` keeps omega_R at every detuning.
enum class CouplingScaling { sqrt_cavity, constant };
CouplingScaling parse_scaling(const std::string& s);
const char* to_string(CouplingScaling s);

struct HopfieldParams {
  double omega_nu = 0.0;   // cm^-1
  double omega_R = 0.0;    // cm^-1, half the resonant splitting
  double length_um = 0.0;  // physical cavity length
  double n_b = 1.0;
  std::vector<int> orders;
  double alpha = 1.0;
  CouplingScaling scaling = CouplingScaling::sqrt_cavity;

  /// Dipolar self-energy D = omega_R^2 / omega_nu.
  double D() const { return omega_R * omega_R / omega_nu; }
  /// Light-matter coupling at cavity energy omega_c.
  double coupling(double omega_c) const;
  void validate() const;
};

/// (1/n_b) sqrt((m / (2 alpha L))^2 + k_par^2) in cm^-1, L in um.
double cavity_mode_energy(int m, double length_um, double n_b, double k_par, double alpha = 1.0);

/// Rows [wc, iG, 0, iG; -iG, wv+2D, iG, 2D; 0, iG, -wc, iG; iG, -2D, -iG, -wv-2D]
/// with G = coupling(omega_c). Acts on row vectors (w, x, y, z).
Mat4 build_full_matrix(const HopfieldParams& p, double omega_c);
/// The two diagonal 2x2 blocks of the full matrix without any D terms.
Mat4 build_rwa_matrix(const HopfieldParams& p, double omega_c);
Mat4 build_matrix(const HopfieldParams& p, double omega_c, Model model);

struct Eigenpair {
  double energy = 0.0;
  std::array<std::complex<double>, 4> v{};  // (w, x, y, z)
  double norm = 0.0;                        // +1 or -1 under diag(1, 1, -1, -1)
};

/// Eigenvalues of the matrix (ascending) with left eigenvectors normalized to
/// unit Bogoliubov norm. ModelInstabilityError when an eigenvalue has an
/// imaginary part beyond 1e-8 * max(1, |lambda|max).
std::array<Eigenpair, 4> diagonalize(const Mat4& m);

struct PolaritonState {
  double energy = 0.0;
  std::complex<double> w, x, y, z;
  double photon_fraction = 0.0;
  double matter_fraction = 0.0;
};

/// (|w|^2 - |y|^2, |x|^2 - |z|^2), clamped to [0, 1]. ContractError when the
/// state is not normalized to +1 within 1e-9.
std::pair<double, double> hopfield_fractions(const PolaritonState& s);

struct PolaritonPair {
  PolaritonState lower;
  PolaritonState upper;
};

/// Positive-energy eigenstates at cavity energy omega_c.
PolaritonPair polaritons(const HopfieldParams& p, double omega_c, Model model);

enum class ControlKind { thickness, angle };
ControlKind parse_control(const std::string& s);
const char* to_string(ControlKind c);

struct BranchSample {
  double control = 0.0;
  double omega_c = 0.0;
  PolaritonState state;
};

struct PolaritonBranch {
  int order = 0;
  int sign = 0;  // -1 lower, +1 upper
  std::vector<BranchSample> samples;

  std::string label() const;
};

/// State of branch (order, sign) at one control value: a thickness in um
/// (normal incidence) or an incidence angle in degrees in air. For angles the
/// in-plane wavenumber k_par = E sin(theta) is solved self-consistently.
BranchSample branch_sample(const HopfieldParams& p, ControlKind kind, double control, int order,
                           int sign, Model model);

/// Both branches of every order in p.orders over the sorted control values.
std::vector<PolaritonBranch> polariton_branches(const HopfieldParams& p, ControlKind kind,
                                                const std::vector<double>& controls, Model model);

/// inf of the upper branch minus sup of the lower branch over
/// omega_c = omega_nu + delta, delta in [lo, hi] (omega_c clipped to stay > 0).
/// InsufficientDataError unless lo <= -5 omega_R and hi >= 5 omega_R.
double bandgap(const HopfieldParams& p, double detuning_lo, double detuning_hi, Model model,
               std::size_t samples = 4001);

}  // namespace vusc
