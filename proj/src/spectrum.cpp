#include "vusc/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "vusc/csv.hpp"
#include "vusc/errors.hpp"

namespace vusc {

std::vector<double> Grid::samples() const {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ContractError(fmt::format("grid step must be > 0 (got {})", step));
  }
  if (!(stop >= start)) {
    throw ContractError(fmt::format("grid stop {} below start {}", stop, start));
  }
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

Spectrum::Spectrum(std::vector<double> wavenumbers, std::vector<double> values)
    : k_(std::move(wavenumbers)), v_(std::move(values)) {
  if (k_.size() != v_.size()) {
    throw ContractError(fmt::format("spectrum has {} wavenumbers but {} values", k_.size(),
                                    v_.size()));
  }
  for (std::size_t i = 1; i < k_.size(); ++i) {
    if (!(k_[i] > k_[i - 1])) {
      throw ContractError(fmt::format("spectrum grid not strictly increasing at index {} ({} -> {})",
                                      i, k_[i - 1], k_[i]));
    }
  }
}

double Spectrum::at(double k) const {
  if (k_.empty() || k < k_.front() || k > k_.back()) {
    throw DomainError(fmt::format("wavenumber {} outside spectrum range", k));
  }
  auto it = std::lower_bound(k_.begin(), k_.end(), k);
  auto i = static_cast<std::size_t>(it - k_.begin());
  if (k_[i] == k) return v_[i];
  const double t = (k - k_[i - 1]) / (k_[i] - k_[i - 1]);
  return v_[i - 1] + t * (v_[i] - v_[i - 1]);
}

Spectrum Spectrum::window(double lo, double hi) const {
  std::vector<double> k, v;
  for (std::size_t i = 0; i < k_.size(); ++i) {
    if (k_[i] >= lo && k_[i] <= hi) {
      k.push_back(k_[i]);
      v.push_back(v_[i]);
    }
  }
  return Spectrum(std::move(k), std::move(v));
}

Spectrum read_spectrum_csv(const std::string& path) {
  const auto table = csv::read(path);
  std::vector<double> k, v;
  k.reserve(table.rows.size());
  v.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto where = fmt::format("{}:{}", path, row.line);
    if (row.fields.size() < 2) throw ParseError(where, "expected at least 2 columns");
    k.push_back(csv::parse_double(row.fields[0], where));
    v.push_back(csv::parse_double(row.fields[1], where));
  }
  try {
    return Spectrum(std::move(k), std::move(v));
  } catch (const ContractError& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace vusc
