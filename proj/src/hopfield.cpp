#include "vusc/hopfield.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vusc/errors.hpp"
#include "vusc/parallel.hpp"
#include "vusc/units.hpp"

namespace vusc {
namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};
constexpr std::array<double, 4> kMetric{1.0, 1.0, -1.0, -1.0};

double bogoliubov_norm(const std::array<cplx, 4>& v) {
  double n = 0.0;
  for (int i = 0; i < 4; ++i) n += kMetric[i] * std::norm(v[i]);
  return n;
}

// `count` independent solutions of (A^T - lambda I) v = 0 by Gaussian
// elimination with complete pivoting, stopping after 4 - count pivots.
std::vector<std::array<cplx, 4>> null_space(const Mat4& a, cplx lambda, int count) {
  Mat4 b;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) b[i][j] = a[j][i] - (i == j ? lambda : cplx(0.0));
  }
  std::array<int, 4> col{0, 1, 2, 3};
  const int rank = 4 - count;
  for (int s = 0; s < rank; ++s) {
    int pi = s, pj = s;
    double best = -1.0;
    for (int i = s; i < 4; ++i) {
      for (int j = s; j < 4; ++j) {
        if (std::abs(b[i][j]) > best) {
          best = std::abs(b[i][j]);
          pi = i;
          pj = j;
        }
      }
    }
    std::swap(b[s], b[pi]);
    if (pj != s) {
      for (int i = 0; i < 4; ++i) std::swap(b[i][s], b[i][pj]);
      std::swap(col[s], col[pj]);
    }
    if (best == 0.0) continue;
    for (int i = s + 1; i < 4; ++i) {
      const cplx f = b[i][s] / b[s][s];
      for (int j = s; j < 4; ++j) b[i][j] -= f * b[s][j];
    }
  }
  std::vector<std::array<cplx, 4>> out;
  for (int free = rank; free < 4; ++free) {
    std::array<cplx, 4> x{};
    x[free] = 1.0;
    for (int i = rank - 1; i >= 0; --i) {
      cplx s = 0.0;
      for (int j = i + 1; j < 4; ++j) s += b[i][j] * x[j];
      x[i] = b[i][i] == cplx(0.0) ? cplx(0.0) : -s / b[i][i];
    }
    std::array<cplx, 4> v{};
    for (int j = 0; j < 4; ++j) v[col[j]] = x[j];
    out.push_back(v);
  }
  return out;
}

void fix_phase(std::array<cplx, 4>& v) {
  int big = 0;
  for (int i = 1; i < 4; ++i) {
    if (std::abs(v[i]) > std::abs(v[big])) big = i;
  }
  const cplx ph = std::abs(v[big]) > 0.0 ? std::conj(v[big]) / std::abs(v[big]) : cplx(1.0);
  for (auto& c : v) c *= ph;
  v[big] = std::abs(v[big]);
}

PolaritonState to_state(const Eigenpair& e) {
  PolaritonState s;
  s.energy = e.energy;
  s.w = e.v[0];
  s.x = e.v[1];
  s.y = e.v[2];
  s.z = e.v[3];
  const auto [ph, mt] = hopfield_fractions(s);
  s.photon_fraction = ph;
  s.matter_fraction = mt;
  return s;
}

}  // namespace

Model parse_model(const std::string& s) {
  if (s == "full") return Model::full;
  if (s == "rwa") return Model::rwa;
  throw ContractError(fmt::format("unknown model '{}' (full | rwa)", s));
}

const char* to_string(Model m) { return m == Model::full ? "full" : "rwa"; }

CouplingScaling parse_scaling(const std::string& s) {
  if (s == "sqrt_cavity") return CouplingScaling::sqrt_cavity;
  if (s == "constant") return CouplingScaling::constant;
  throw ContractError(fmt::format("unknown coupling scaling '{}' (sqrt_cavity | constant)", s));
}

const char* to_string(CouplingScaling s) {
  return s == CouplingScaling::sqrt_cavity ? "sqrt_cavity" : "constant";
}

double HopfieldParams::coupling(double omega_c) const {
  if (scaling == CouplingScaling::constant) return omega_R;
  return omega_R * std::sqrt(omega_c / omega_nu);
}

void HopfieldParams::validate() const {
  if (!(omega_nu > 0.0)) throw ContractError(fmt::format("omega_nu must be > 0 (got {})", omega_nu));
  if (!(omega_R >= 0.0) || !std::isfinite(omega_R)) {
    throw ContractError(fmt::format("omega_R must be >= 0 (got {})", omega_R));
  }
  if (!(n_b > 0.0)) throw ContractError(fmt::format("n_b must be > 0 (got {})", n_b));
  if (!(alpha > 0.0)) throw ContractError(fmt::format("alpha must be > 0 (got {})", alpha));
  for (const int m : orders) {
    if (m < 1) throw ContractError(fmt::format("mode order must be >= 1 (got {})", m));
  }
}

double cavity_mode_energy(int m, double length_um, double n_b, double k_par, double alpha) {
  if (m < 1) throw ContractError(fmt::format("mode order must be >= 1 (got {})", m));
  if (!(length_um > 0.0)) throw ContractError(fmt::format("length must be > 0 (got {})", length_um));
  if (!(n_b > 0.0) || !(alpha > 0.0)) throw ContractError("n_b and alpha must be > 0");
  const double kz = m / (2.0 * alpha * units::um_to_cm(length_um));
  return std::hypot(kz, k_par) / n_b;
}

Mat4 build_full_matrix(const HopfieldParams& p, double omega_c) {
  if (!(omega_c > 0.0)) throw ContractError(fmt::format("omega_c must be > 0 (got {})", omega_c));
  const double g = p.coupling(omega_c);
  const double d2 = 2.0 * p.D();
  const double wv = p.omega_nu;
  const cplx ig = kI * g;
  Mat4 m{};
  m[0] = {omega_c, ig, 0.0, ig};
  m[1] = {-ig, wv + d2, ig, d2};
  m[2] = {0.0, ig, -omega_c, ig};
  m[3] = {ig, -d2, -ig, -wv - d2};
  return m;
}

Mat4 build_rwa_matrix(const HopfieldParams& p, double omega_c) {
  if (!(omega_c > 0.0)) throw ContractError(fmt::format("omega_c must be > 0 (got {})", omega_c));
  const cplx ig = kI * p.coupling(omega_c);
  Mat4 m{};
  m[0] = {omega_c, ig, 0.0, 0.0};
  m[1] = {-ig, p.omega_nu, 0.0, 0.0};
  m[2] = {0.0, 0.0, -omega_c, ig};
  m[3] = {0.0, 0.0, -ig, -p.omega_nu};
  return m;
}

Mat4 build_matrix(const HopfieldParams& p, double omega_c, Model model) {
  return model == Model::full ? build_full_matrix(p, omega_c) : build_rwa_matrix(p, omega_c);
}

std::array<Eigenpair, 4> diagonalize(const Mat4& m) {
  std::array<Eigenpair, 4> out;
  bool diagonal = true;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) diagonal = diagonal && (i == j || m[i][j] == cplx(0.0));
  }
  if (diagonal) {
    for (int i = 0; i < 4; ++i) {
      if (m[i][i].imag() != 0.0) throw ModelInstabilityError("complex diagonal entry");
      out[i].energy = m[i][i].real();
      out[i].v = {};
      out[i].v[i] = 1.0;
      out[i].norm = kMetric[i];
    }
    std::sort(out.begin(), out.end(),
              [](const Eigenpair& a, const Eigenpair& b) { return a.energy < b.energy; });
    return out;
  }

  const auto c = characteristic_polynomial(m);
  auto roots = quartic_roots(c[0], c[1], c[2], c[3]);
  double scale = 1.0;
  for (const auto& r : roots) scale = std::max(scale, std::abs(r));
  for (const auto& r : roots) {
    if (std::abs(r.imag()) > 1e-8 * scale) {
      throw ModelInstabilityError(
          fmt::format("non-real eigenvalue {}{:+}i: parameters are unphysical", r.real(), r.imag()));
    }
  }
  std::array<double, 4> ev;
  for (int i = 0; i < 4; ++i) ev[i] = roots[i].real();
  std::sort(ev.begin(), ev.end());

  // For Bogoliubov matrices M eta is Hermitian, so the eta-Rayleigh quotient of
  // a left eigenvector is stationary and recovers digits the quartic loses
  // when two roots nearly coincide.
  bool metric_hermitian = true;
  for (int r = 0; r < 4; ++r) {
    for (int q = 0; q < 4; ++q) {
      const cplx a = m[r][q] * kMetric[q], b = std::conj(m[q][r] * kMetric[r]);
      metric_hermitian = metric_hermitian && std::abs(a - b) <= 1e-14 * scale;
    }
  }

  int i = 0;
  while (i < 4) {
    int j = i + 1;
    while (j < 4 && ev[j] - ev[i] <= 1e-12 * scale) ++j;
    const int mult = j - i;
    double mean = 0.0;
    for (int k = i; k < j; ++k) mean += ev[k];
    mean /= mult;
    const auto basis = null_space(m, mean, mult);
    for (int k = 0; k < mult; ++k) {
      auto v = basis[k];
      const double n = bogoliubov_norm(v);
      double euclid = 0.0;
      for (const auto& x : v) euclid += std::norm(x);
      if (!(std::abs(n) > 1e-14 * euclid)) {
        throw ModelInstabilityError(fmt::format("zero Bogoliubov norm at eigenvalue {}", mean));
      }
      double energy = ev[i + k];
      if (metric_hermitian && mult == 1) {
        cplx num = 0.0;
        for (int r = 0; r < 4; ++r) {
          for (int q = 0; q < 4; ++q) num += v[r] * m[r][q] * kMetric[q] * std::conj(v[q]);
        }
        energy = num.real() / n;
      }
      const double f = 1.0 / std::sqrt(std::abs(n));
      for (auto& x : v) x *= f;
      fix_phase(v);
      out[i + k] = {energy, v, n > 0.0 ? 1.0 : -1.0};
    }
    i = j;
  }
  return out;
}

std::pair<double, double> hopfield_fractions(const PolaritonState& s) {
  const double ph = std::norm(s.w) - std::norm(s.y);
  const double mt = std::norm(s.x) - std::norm(s.z);
  if (std::abs(ph + mt - 1.0) > 1e-9) {
    throw ContractError(fmt::format("state not normalized: |w|^2+|x|^2-|y|^2-|z|^2 = {}", ph + mt));
  }
  return {std::clamp(ph, 0.0, 1.0), std::clamp(mt, 0.0, 1.0)};
}

PolaritonPair polaritons(const HopfieldParams& p, double omega_c, Model model) {
  const auto e = diagonalize(build_matrix(p, omega_c, model));
  if (!(e[2].energy > 0.0) || e[2].norm < 0.0 || e[3].norm < 0.0) {
    throw ModelInstabilityError(
        fmt::format("no positive-norm polariton pair at omega_c = {}", omega_c));
  }
  return {to_state(e[2]), to_state(e[3])};
}

ControlKind parse_control(const std::string& s) {
  if (s == "thickness") return ControlKind::thickness;
  if (s == "angle") return ControlKind::angle;
  throw ContractError(fmt::format("unknown control kind '{}' (thickness | angle)", s));
}

const char* to_string(ControlKind c) { return c == ControlKind::thickness ? "thickness" : "angle"; }

std::string PolaritonBranch::label() const {
  return fmt::format("P{}{}", order, sign < 0 ? "-" : "+");
}

BranchSample branch_sample(const HopfieldParams& p, ControlKind kind, double control, int order,
                           int sign, Model model) {
  if (sign != 1 && sign != -1) throw ContractError(fmt::format("branch sign must be +-1 (got {})", sign));
  auto pick = [&](double wc) {
    const auto pair = polaritons(p, wc, model);
    return sign < 0 ? pair.lower : pair.upper;
  };
  try {
    BranchSample s;
    s.control = control;
    if (kind == ControlKind::thickness) {
      s.omega_c = cavity_mode_energy(order, control, p.n_b, 0.0, p.alpha);
      s.state = pick(s.omega_c);
      return s;
    }
    if (!(control >= 0.0 && control < 90.0)) {
      throw DomainError(fmt::format("angle {} deg outside [0, 90)", control));
    }
    const double sn = std::sin(control * units::kPi / 180.0);
    s.omega_c = cavity_mode_energy(order, p.length_um, p.n_b, 0.0, p.alpha);
    s.state = pick(s.omega_c);
    for (int it = 0; it < 500; ++it) {
      const double wc = cavity_mode_energy(order, p.length_um, p.n_b, s.state.energy * sn, p.alpha);
      const auto next = pick(wc);
      const bool done = std::abs(next.energy - s.state.energy) <= 1e-13 * next.energy;
      s.omega_c = wc;
      s.state = next;
      if (done) return s;
    }
    throw NumericError(fmt::format("in-plane wavevector iteration did not converge at {} deg", control));
  } catch (const ModelInstabilityError& e) {
    throw ModelInstabilityError(fmt::format("{} = {}: {}", to_string(kind), control, e.what()));
  }
}

std::vector<PolaritonBranch> polariton_branches(const HopfieldParams& p, ControlKind kind,
                                                const std::vector<double>& controls, Model model) {
  p.validate();
  if (controls.empty()) throw ContractError("sweep has no control values");
  if (p.orders.empty()) throw ContractError("no mode orders requested");
  if (kind == ControlKind::angle && !(p.length_um > 0.0)) {
    throw ContractError("angle sweep needs a cavity length > 0");
  }
  auto sorted = controls;
  std::sort(sorted.begin(), sorted.end());
  std::vector<PolaritonBranch> out;
  for (const int m : p.orders) {
    for (const int sign : {-1, 1}) {
      PolaritonBranch b;
      b.order = m;
      b.sign = sign;
      b.samples.resize(sorted.size());
      out.push_back(std::move(b));
    }
  }
  const std::size_t nc = sorted.size();
  parallel_for(out.size() * nc, [&](std::size_t idx) {
    auto& b = out[idx / nc];
    b.samples[idx % nc] = branch_sample(p, kind, sorted[idx % nc], b.order, b.sign, model);
  });
  return out;
}

double bandgap(const HopfieldParams& p, double lo, double hi, Model model, std::size_t samples) {
  p.validate();
  if (lo > -5.0 * p.omega_R || hi < 5.0 * p.omega_R) {
    throw InsufficientDataError(fmt::format(
        "detuning range [{}, {}] must span at least +-5 omega_R = +-{}", lo, hi, 5.0 * p.omega_R));
  }
  if (samples < 2) throw ContractError("bandgap needs >= 2 samples");
  if (p.omega_R == 0.0) return 0.0;
  std::vector<double> delta(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    delta[i] = lo + (hi - lo) * double(i) / double(samples - 1);
  }
  delta.push_back(0.0);
  std::vector<PolaritonPair> pairs(delta.size());
  const double floor = 1e-6 * p.omega_nu;
  parallel_for(delta.size(), [&](std::size_t i) {
    pairs[i] = polaritons(p, std::max(p.omega_nu + delta[i], floor), model);
  });
  double up = pairs[0].upper.energy, lp = pairs[0].lower.energy;
  for (const auto& pr : pairs) {
    up = std::min(up, pr.upper.energy);
    lp = std::max(lp, pr.lower.energy);
  }
  return up - lp;
}

}  // namespace vusc
