#include "vusc/peaks.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vusc/errors.hpp"

namespace vusc {

double default_prominence(const Spectrum& s) {
  const auto v = s.values();
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return 0.05 * (*hi - *lo);
}

PeakSearch find_peaks(const Spectrum& s, double min_prominence) {
  if (s.size() < 5) {
    throw ContractError(fmt::format("peak search needs >= 5 samples (got {})", s.size()));
  }
  const auto k = s.wavenumbers();
  const auto v = s.values();
  const std::size_t n = v.size();

  std::vector<Peak> cand;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(v[i] > v[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && v[j + 1] == v[i]) ++j;
    if (j + 1 >= n || !(v[j + 1] < v[i])) {
      i = j + 1;
      continue;
    }
    const std::size_t top = (i + j) / 2;
    const double h = v[top];

    std::size_t lb = i, rb = j;
    double lmin = h, rmin = h;
    for (std::size_t a = i; a-- > 0;) {
      if (v[a] > h) break;
      if (v[a] < lmin) {
        lmin = v[a];
        lb = a;
      }
    }
    for (std::size_t a = j + 1; a < n; ++a) {
      if (v[a] > h) break;
      if (v[a] < rmin) {
        rmin = v[a];
        rb = a;
      }
    }
    Peak p;
    p.index = top;
    p.prominence = h - std::max(lmin, rmin);
    if (p.prominence >= min_prominence && p.prominence > 0.0) {
      const double level = h - 0.5 * p.prominence;
      std::size_t a = i;
      while (a > lb && v[a] > level) --a;
      const double kl = v[a] > level ? k[a]
                                     : k[a] + (level - v[a]) / (v[a + 1] - v[a]) * (k[a + 1] - k[a]);
      std::size_t b = j;
      while (b < rb && v[b] > level) ++b;
      const double kr = v[b] > level ? k[b]
                                     : k[b] - (level - v[b]) / (v[b - 1] - v[b]) * (k[b] - k[b - 1]);
      p.fwhm = kr - kl;

      p.center = k[top];
      p.height = h;
      if (i == j) {
        // Vertex of the parabola through the three samples around the maximum.
        const double x0 = k[top - 1], x1 = k[top], x2 = k[top + 1];
        const double y0 = v[top - 1], y1 = v[top], y2 = v[top + 1];
        const double d1 = (y1 - y0) / (x1 - x0);
        const double d2 = (y2 - y1) / (x2 - x1);
        const double c2 = (d2 - d1) / (x2 - x0);
        if (c2 < 0.0) {
          const double c1 = d1 - c2 * (x0 + x1);
          const double xv = -c1 / (2.0 * c2);
          if (xv > x0 && xv < x2) {
            p.center = xv;
            p.height = y0 + (xv - x0) * (d1 + c2 * (xv - x1));
          }
        }
      }
      if (p.fwhm > 0.0) cand.push_back(p);
    }
    i = j + 1;
  }

  PeakSearch out;
  for (const auto& p : cand) {
    if (!out.peaks.empty()) {
      auto& last = out.peaks.back();
      const double step = k[std::min(p.index, n - 1)] - k[p.index - 1];
      if (p.center - last.center <= step) {
        ++out.merged;
        if (p.height > last.height) last = p;
        continue;
      }
    }
    out.peaks.push_back(p);
  }
  return out;
}

std::vector<Peak> detect_peaks(const Spectrum& s, double min_prominence) {
  return find_peaks(s, min_prominence).peaks;
}

}  // namespace vusc
