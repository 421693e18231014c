#include "vusc/tmm.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vusc/errors.hpp"
#include "vusc/parallel.hpp"
#include "vusc/units.hpp"

namespace vusc {
namespace {

constexpr cplx kI{0.0, 1.0};

// Amplitudes of the tangential field u = a exp(i beta q z) + b exp(-i beta q z)
// in every medium, z measured from the medium's left interface. The exit wave
// is fixed to a = 1, b = 0 and everything else follows by back-propagation.
struct Amplitudes {
  std::vector<cplx> a, b, q, kappa, eps;
  double beta = 0.0;
  double s_par = 0.0;
};

Amplitudes back_propagate(const IndexProfile& n, const std::vector<double>& d, double k,
                          double s_par, bool p_pol) {
  const std::size_t m = n.size();
  Amplitudes w;
  w.beta = units::kTwoPi * k * units::kCmPerUm;
  w.s_par = s_par;
  w.a.resize(m);
  w.b.resize(m);
  w.q.resize(m);
  w.kappa.resize(m);
  w.eps.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    w.eps[j] = n[j] * n[j];
    w.q[j] = passive_sqrt(w.eps[j] - s_par * s_par);
    w.kappa[j] = p_pol ? w.q[j] / w.eps[j] : w.q[j];
  }
  w.a[m - 1] = 1.0;
  w.b[m - 1] = 0.0;
  cplx U = 1.0;
  cplx V = w.kappa[m - 1];
  for (std::size_t j = m - 1; j-- > 0;) {
    const cplx A = 0.5 * (U + V / w.kappa[j]);
    const cplx B = 0.5 * (U - V / w.kappa[j]);
    if (j == 0) {
      w.a[0] = A;
      w.b[0] = B;
      break;
    }
    const cplx phase = kI * w.beta * w.q[j] * d[j - 1];
    w.a[j] = A * std::exp(-phase);
    w.b[j] = B * std::exp(phase);
    U = w.a[j] + w.b[j];
    V = w.kappa[j] * (w.a[j] - w.b[j]);
  }
  return w;
}

void check_bounding(const IndexProfile& n) {
  for (const std::size_t j : {std::size_t{0}, n.size() - 1}) {
    if (std::abs(n[j].imag()) > 1e-12 * std::abs(n[j])) {
      throw ContractError(fmt::format("{} medium must be lossless (index {}{:+}i)",
                                      j == 0 ? "entry" : "exit", n[j].real(), n[j].imag()));
    }
  }
}

double parallel_index(const IndexProfile& n, double angle_deg) {
  if (!(angle_deg >= 0.0 && angle_deg < 90.0)) {
    throw DomainError(fmt::format("incidence angle {} deg outside [0, 90)", angle_deg));
  }
  return n[0].real() * std::sin(angle_deg * units::kPi / 180.0);
}

struct Single {
  cplx r, t;
  double T, R;
  std::vector<double> layer_abs;
};

Single solve_single(const IndexProfile& n, const std::vector<double>& d, double k, double s_par,
                    bool p_pol) {
  const auto w = back_propagate(n, d, k, s_par, p_pol);
  const std::size_t m = n.size();
  const cplx a0 = w.a[0];
  const cplx ru = w.b[0] / a0;
  const cplx tu = w.a[m - 1] / a0;
  const double inc = w.kappa[0].real() * std::norm(a0);
  Single out;
  out.R = std::norm(ru);
  out.T = w.kappa[m - 1].real() * std::norm(w.a[m - 1]) / inc;
  if (p_pol) {
    out.r = -ru;
    out.t = w.kappa[m - 1] / w.kappa[0] * tu;
  } else {
    out.r = ru;
    out.t = tu;
  }
  // Poynting flux Re(conj(u) v) on the left interface of each layer and on the
  // exit interface; the drop across a layer is its absorption.
  std::vector<double> flux(m - 1);
  for (std::size_t j = 1; j < m; ++j) {
    const cplx u = w.a[j] + w.b[j];
    const cplx v = w.kappa[j] * (w.a[j] - w.b[j]);
    flux[j - 1] = (std::conj(u) * v).real() / inc;
  }
  out.layer_abs.resize(m - 2);
  for (std::size_t j = 0; j + 2 < m; ++j) out.layer_abs[j] = flux[j] - flux[j + 1];
  return out;
}

template <class F>
auto with_k(double k, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw DomainError(fmt::format("at k = {} cm^-1: {}", k, e.what()));
  } catch (const ContractError& e) {
    throw ContractError(fmt::format("at k = {} cm^-1: {}", k, e.what()));
  }
}

std::vector<double> thicknesses(const Stack& s) {
  std::vector<double> d;
  d.reserve(s.layers.size());
  for (const auto& l : s.layers) {
    if (!(l.thickness_um >= 0.0)) {
      throw ContractError(fmt::format("layer thickness must be >= 0 (got {})", l.thickness_um));
    }
    d.push_back(l.thickness_um);
  }
  return d;
}

void check_grid(const std::vector<double>& g) {
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) {
      throw ContractError(fmt::format("grid not strictly increasing at index {}", i));
    }
  }
}

}  // namespace

WindowCorrection::WindowCorrection(double c) : c_(c) {
  if (!(c >= 0.0 && c <= 1.0)) {
    throw ContractError(fmt::format("window correction must lie in [0, 1] (got {})", c));
  }
}

WindowCorrection::WindowCorrection(Spectrum curve) : curve_(std::move(curve)) {
  if (curve_.empty()) throw ContractError("window correction curve is empty");
  for (const double c : curve_.values()) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw ContractError(fmt::format("window correction value {} outside [0, 1]", c));
    }
  }
}

double WindowCorrection::at(double k) const { return curve_.empty() ? c_ : curve_.at(k); }

double Stack::total_thickness_um() const {
  double t = 0.0;
  for (const auto& l : layers) t += l.thickness_um;
  return t;
}

Stack Stack::reversed() const {
  Stack s = *this;
  std::reverse(s.layers.begin(), s.layers.end());
  std::swap(s.entry, s.exit);
  return s;
}

Polarization parse_polarization(const std::string& s) {
  if (s == "s" || s == "te" || s == "TE") return Polarization::s;
  if (s == "p" || s == "tm" || s == "TM") return Polarization::p;
  if (s == "unpolarized" || s == "u") return Polarization::unpolarized;
  throw ContractError(fmt::format("unknown polarization '{}' (s | p | unpolarized)", s));
}

const char* to_string(Polarization p) {
  switch (p) {
    case Polarization::s: return "s";
    case Polarization::p: return "p";
    case Polarization::unpolarized: return "unpolarized";
  }
  return "?";
}

IndexProfile index_profile(const Stack& stack, double k) {
  IndexProfile n;
  n.reserve(stack.layers.size() + 2);
  n.push_back(eval_index(stack.entry, k));
  for (const auto& l : stack.layers) n.push_back(eval_index(l.material, k));
  n.push_back(eval_index(stack.exit, k));
  return n;
}

TmmResult solve_indices(const IndexProfile& n, const std::vector<double>& d,
                        const PlaneWaveCtx& ctx, double window_c) {
  if (n.size() != d.size() + 2) throw ContractError("index profile does not match layer count");
  if (!(ctx.k > 0.0)) throw DomainError(fmt::format("wavenumber must be > 0 (got {})", ctx.k));
  check_bounding(n);
  const double s_par = parallel_index(n, ctx.angle_deg);
  TmmResult res;
  if (ctx.polarization == Polarization::unpolarized) {
    const auto s = solve_single(n, d, ctx.k, s_par, false);
    const auto p = solve_single(n, d, ctx.k, s_par, true);
    res.r = s.r;
    res.t = s.t;
    res.T = 0.5 * (s.T + p.T);
    res.R = 0.5 * (s.R + p.R);
    res.layer_absorption.resize(s.layer_abs.size());
    for (std::size_t j = 0; j < s.layer_abs.size(); ++j) {
      res.layer_absorption[j] = 0.5 * (s.layer_abs[j] + p.layer_abs[j]);
    }
  } else {
    auto one = solve_single(n, d, ctx.k, s_par, ctx.polarization == Polarization::p);
    res.r = one.r;
    res.t = one.t;
    res.T = one.T;
    res.R = one.R;
    res.layer_absorption = std::move(one.layer_abs);
  }
  double a = 0.0;
  for (const double x : res.layer_absorption) a += x;
  const double c2 = window_c * window_c;
  res.A = a + (1.0 - c2) * res.T;
  res.T *= c2;
  return res;
}

TmmResult solve_stack(const Stack& stack, const PlaneWaveCtx& ctx) {
  return with_k(ctx.k, [&] {
    return solve_indices(index_profile(stack, ctx.k), thicknesses(stack), ctx,
                         stack.window.at(ctx.k));
  });
}

cplx reflection_amplitude(cplx entry, const std::vector<cplx>& layer_index,
                          const std::vector<double>& thickness_um, cplx exit, double k) {
  if (layer_index.size() != thickness_um.size()) {
    throw ContractError("reflection_amplitude: index and thickness lists differ in length");
  }
  IndexProfile n;
  n.reserve(layer_index.size() + 2);
  n.push_back(entry);
  n.insert(n.end(), layer_index.begin(), layer_index.end());
  n.push_back(exit);
  const auto w = back_propagate(n, thickness_um, k, 0.0, false);
  return w.b[0] / w.a[0];
}

Spectrum transmission_spectrum(const Stack& stack, const std::vector<double>& grid,
                               double angle_deg, Polarization pol, Quantity q) {
  check_grid(grid);
  const auto d = thicknesses(stack);
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const double k = grid[i];
    out[i] = with_k(k, [&] {
      const auto r = solve_indices(index_profile(stack, k), d, {k, angle_deg, pol},
                                   stack.window.at(k));
      switch (q) {
        case Quantity::reflectance: return r.R;
        case Quantity::absorptance: return r.A;
        default: return r.T;
      }
    });
  });
  return Spectrum(grid, std::move(out));
}

namespace {

std::vector<double> z_samples(const Stack& stack, double dz) {
  if (!(dz > 0.0) || !std::isfinite(dz)) {
    throw ContractError(fmt::format("z resolution must be > 0 (got {})", dz));
  }
  const double total = stack.total_thickness_um();
  const auto n = static_cast<std::size_t>(std::floor(total / dz + 1e-9));
  std::vector<double> z(n + 1);
  for (std::size_t i = 0; i <= n; ++i) z[i] = dz * double(i);
  if (total - z.back() > 1e-9 * dz) z.push_back(total);
  return z;
}

// Fills intensity (and optionally flux) for one polarization.
void profile_single(const IndexProfile& n, const std::vector<double>& d, double k, double s_par,
                    bool p_pol, const std::vector<double>& z, double* intensity, double* flux) {
  const auto w = back_propagate(n, d, k, s_par, p_pol);
  const double inc = w.kappa[0].real() * std::norm(w.a[0]);
  // Unit incident |E|: for p the tangential amplitude is H, |E| = |H| / n0.
  const double scale = (p_pol ? n[0].real() * n[0].real() : 1.0) / std::norm(w.a[0]);
  std::size_t layer = 0;
  double start = 0.0;
  for (std::size_t iz = 0; iz < z.size(); ++iz) {
    while (layer + 1 < d.size() && z[iz] >= start + d[layer]) start += d[layer++];
    const std::size_t j = d.empty() ? n.size() - 1 : layer + 1;
    const double zeta = d.empty() ? 0.0 : z[iz] - start;
    const cplx ph = kI * w.beta * w.q[j] * zeta;
    const cplx fwd = w.a[j] * std::exp(ph);
    const cplx bwd = w.b[j] * std::exp(-ph);
    const cplx u = fwd + bwd;
    const cplx v = w.kappa[j] * (fwd - bwd);
    double e2;
    if (p_pol) {
      const cplx ez = -(w.s_par / w.eps[j]) * u;
      e2 = std::norm(v) + std::norm(ez);
    } else {
      e2 = std::norm(u);
    }
    intensity[iz] += e2 * scale;
    if (flux) flux[iz] += (std::conj(u) * v).real() / inc;
  }
}

void profile_into(const Stack& stack, const std::vector<double>& d, const PlaneWaveCtx& ctx,
                  const std::vector<double>& z, double* intensity, double* flux) {
  const auto n = index_profile(stack, ctx.k);
  check_bounding(n);
  const double s_par = parallel_index(n, ctx.angle_deg);
  if (ctx.polarization == Polarization::unpolarized) {
    profile_single(n, d, ctx.k, s_par, false, z, intensity, flux);
    profile_single(n, d, ctx.k, s_par, true, z, intensity, flux);
    for (std::size_t i = 0; i < z.size(); ++i) {
      intensity[i] *= 0.5;
      if (flux) flux[i] *= 0.5;
    }
  } else {
    profile_single(n, d, ctx.k, s_par, ctx.polarization == Polarization::p, z, intensity, flux);
  }
}

}  // namespace

FieldMap field_map(const Stack& stack, const std::vector<double>& k_grid, double z_resolution_um,
                   double angle_deg, Polarization pol) {
  check_grid(k_grid);
  FieldMap map;
  map.z_um = z_samples(stack, z_resolution_um);
  map.k = k_grid;
  map.values.assign(k_grid.size() * map.z_um.size(), 0.0);
  const auto d = thicknesses(stack);
  parallel_for(k_grid.size(), [&](std::size_t ik) {
    with_k(k_grid[ik], [&] {
      profile_into(stack, d, {k_grid[ik], angle_deg, pol}, map.z_um,
                   map.values.data() + ik * map.z_um.size(), nullptr);
      return 0;
    });
  });
  return map;
}

FieldProfile field_profile(const Stack& stack, const PlaneWaveCtx& ctx, double z_resolution_um) {
  FieldProfile p;
  p.z_um = z_samples(stack, z_resolution_um);
  p.intensity.assign(p.z_um.size(), 0.0);
  p.flux.assign(p.z_um.size(), 0.0);
  with_k(ctx.k, [&] {
    profile_into(stack, thicknesses(stack), ctx, p.z_um, p.intensity.data(), p.flux.data());
    return 0;
  });
  return p;
}

}  // namespace vusc
