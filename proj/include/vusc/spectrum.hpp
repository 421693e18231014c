#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vusc {

/// Uniform wavenumber grid [start, stop] with the given step. The last sample
/// is the largest start + i*step not exceeding stop (+1e-9 step slack).
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> samples() const;
};

/// A curve sampled on a strictly increasing wavenumber grid (cm^-1).
class Spectrum {
 public:
  Spectrum() = default;
  /// Throws ContractError unless sizes match and the grid strictly increases.
  Spectrum(std::vector<double> wavenumbers, std::vector<double> values);

  std::span<const double> wavenumbers() const { return k_; }
  std::span<const double> values() const { return v_; }
  std::size_t size() const { return k_.size(); }
  bool empty() const { return k_.empty(); }

  double front_k() const { return k_.front(); }
  double back_k() const { return k_.back(); }

  /// Linear interpolation; DomainError outside [front_k, back_k].
  double at(double k) const;

  /// Sub-spectrum restricted to lo <= k <= hi.
  Spectrum window(double lo, double hi) const;

  template <class F>
  Spectrum transformed(F&& f) const {
    std::vector<double> out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = f(v_[i]);
    return Spectrum(k_, std::move(out));
  }

 private:
  std::vector<double> k_;
  std::vector<double> v_;
};

/// Reads a two-column CSV (`wavenumber_cm-1,value`). Lines starting with '#'
/// and a non-numeric header line are skipped. Extra columns are ignored.
Spectrum read_spectrum_csv(const std::string& path);

}  // namespace vusc
