#pragma once

// Spectral quantities are spectroscopic wavenumbers (cm^-1); lengths are um.
// Conversions happen at API boundaries through the helpers below.

#include <numbers>

namespace vusc::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kCmPerUm = 1.0e-4;
inline constexpr double kUmPerNm = 1.0e-3;

/// 1 eV expressed as a wavenumber.
inline constexpr double kWavenumberPerEv = 8065.543937;

/// Speed of light in m/s.
inline constexpr double kSpeedOfLight = 299792458.0;

constexpr double um_to_cm(double um) { return um * kCmPerUm; }
constexpr double cm_to_um(double cm) { return cm / kCmPerUm; }
constexpr double nm_to_um(double nm) { return nm * kUmPerNm; }
constexpr double ev_to_wavenumber(double ev) { return ev * kWavenumberPerEv; }
constexpr double wavenumber_to_ev(double k) { return k / kWavenumberPerEv; }

/// Vacuum phase of a wavenumber k (cm^-1) over a path of length um.
constexpr double phase_per_um(double k) { return kTwoPi * k * kCmPerUm; }

/// Rate v/d in s^-1 expressed as a wavenumber, i.e. (hbar v / d) / (h c).
constexpr double rate_to_wavenumber(double velocity_m_per_s, double length_m) {
  return velocity_m_per_s / (kTwoPi * kSpeedOfLight * length_m) * 1.0e-2;
}

}  // namespace vusc::units
