#pragma once

#include <cstddef>
#include <vector>

#include "vusc/spectrum.hpp"

namespace vusc {

struct Peak {
  double center = 0.0;      // cm^-1, parabolic refinement of the sampled maximum
  double height = 0.0;      // value at the refined center
  double fwhm = 0.0;        // width at half prominence, cm^-1
  double prominence = 0.0;  // height above the higher of the two bases
  std::size_t index = 0;    // sample index of the maximum
};

struct PeakSearch {
  std::vector<Peak> peaks;   // sorted by center
  std::size_t merged = 0;    // candidates dropped because a higher peak sat within one grid step
};

/// Local maxima whose prominence is at least `min_prominence` (absolute units
/// of the spectrum). Flat tops count once, at their midpoint. ContractError
/// for fewer than 5 samples.
PeakSearch find_peaks(const Spectrum& s, double min_prominence);

std::vector<Peak> detect_peaks(const Spectrum& s, double min_prominence);

/// 5% of (max - min) of the spectrum values.
double default_prominence(const Spectrum& s);

}  // namespace vusc
