#include "vusc/quartic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vusc {
namespace {

using cplx = std::complex<double>;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Root of z^2 + b z + c with the larger magnitude first, cancellation-free.
std::array<cplx, 2> quadratic(cplx b, cplx c) {
  cplx disc = b * b - 4.0 * c;
  // Round-off can push an exact double root slightly off the real axis or
  // below zero; snap it back so degenerate pairs stay real.
  if (std::abs(disc) <= 16.0 * kEps * std::norm(b)) disc = 0.0;
  cplx sq = std::sqrt(disc);
  if ((std::conj(b) * sq).real() < 0.0) sq = -sq;
  const cplx q = -0.5 * (b + sq);
  if (q == cplx(0.0)) return {cplx(0.0), cplx(0.0)};
  return {q, c / q};
}

// One root of m^3 + b m^2 + c m + d, the one of largest magnitude.
cplx cubic_largest(cplx b, cplx c, cplx d) {
  const cplx p = c - b * b / 3.0;
  const cplx q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  cplx s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  cplx u3 = -q / 2.0 + s;
  const cplx alt = -q / 2.0 - s;
  if (std::abs(alt) > std::abs(u3)) u3 = alt;
  cplx best = -b / 3.0;
  if (std::abs(u3) == 0.0) return best;
  const cplx u = std::pow(u3, 1.0 / 3.0);
  const cplx w(-0.5, std::sqrt(3.0) / 2.0);
  cplx uk = u;
  double best_mag = -1.0;
  for (int k = 0; k < 3; ++k) {
    const cplx t = uk - p / (3.0 * uk);
    const cplx m = t - b / 3.0;
    if (std::abs(m) > best_mag) {
      best_mag = std::abs(m);
      best = m;
    }
    uk *= w;
  }
  return best;
}

cplx poly(const std::array<cplx, 5>& a, cplx x) {
  return (((a[0] * x + a[1]) * x + a[2]) * x + a[3]) * x + a[4];
}

cplx dpoly(const std::array<cplx, 5>& a, cplx x) {
  return ((4.0 * a[0] * x + 3.0 * a[1]) * x + 2.0 * a[2]) * x + a[3];
}

}  // namespace

std::array<cplx, 4> characteristic_polynomial(const Mat4& a) {
  Mat4 m{};  // M_0 = 0
  std::array<cplx, 5> c{};
  c[4] = 1.0;  // c[i] multiplies lambda^i
  for (int k = 1; k <= 4; ++k) {
    Mat4 next{};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        cplx s = 0.0;
        for (int l = 0; l < 4; ++l) s += a[i][l] * m[l][j];
        next[i][j] = s + (i == j ? c[5 - k] : cplx(0.0));
      }
    }
    cplx tr = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int l = 0; l < 4; ++l) tr += a[i][l] * next[l][i];
    }
    c[4 - k] = -tr / double(k);
    m = next;
  }
  return {c[3], c[2], c[1], c[0]};
}

std::array<cplx, 4> quartic_roots(cplx c3, cplx c2, cplx c1, cplx c0) {
  const double scale = std::max({std::abs(c3), std::sqrt(std::abs(c2)), std::cbrt(std::abs(c1)),
                                 std::sqrt(std::sqrt(std::abs(c0))), 1e-300});
  const bool biquadratic = std::abs(c3) <= 64.0 * kEps * scale &&
                           std::abs(c1) <= 64.0 * kEps * scale * scale * scale;
  if (biquadratic) {
    const auto y = quadratic(c2, c0);
    const cplx a = std::sqrt(y[0]);
    const cplx b = std::sqrt(y[1]);
    return {a, -a, b, -b};
  }

  // Depressed quartic x^4 + p x^2 + q x + r with lambda = x - c3/4.
  const cplx sh = c3 / 4.0;
  const cplx p = c2 - 6.0 * sh * sh;
  const cplx q = c1 - 2.0 * c2 * sh + 8.0 * sh * sh * sh;
  const cplx r = c0 - c1 * sh + c2 * sh * sh - 3.0 * sh * sh * sh * sh;

  std::array<cplx, 4> x;
  if (std::abs(q) <= 64.0 * kEps * scale * scale * scale) {
    const auto y = quadratic(p, r);
    const cplx a = std::sqrt(y[0]);
    const cplx b = std::sqrt(y[1]);
    x = {a, -a, b, -b};
  } else {
    // (x^2 + p/2 + m)^2 = 2m x^2 - q x + m^2 + m p + p^2/4 - r is a perfect
    // square on the right when m solves the resolvent cubic.
    const cplx m = cubic_largest(p, p * p / 4.0 - r, -q * q / 8.0);
    const cplx s = std::sqrt(2.0 * m);
    const cplx h = q / (2.0 * s);
    const auto r1 = quadratic(-s, p / 2.0 + m + h);
    const auto r2 = quadratic(s, p / 2.0 + m - h);
    x = {r1[0], r1[1], r2[0], r2[1]};
  }

  const std::array<cplx, 5> coef{1.0, c3, c2, c1, c0};
  std::array<cplx, 4> roots;
  for (int i = 0; i < 4; ++i) {
    cplx z = x[i] - sh;
    for (int it = 0; it < 2; ++it) {
      const cplx d = dpoly(coef, z);
      if (std::abs(d) == 0.0) break;
      const cplx step = poly(coef, z) / d;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      z -= step;
    }
    roots[i] = z;
  }
  return roots;
}

}  // namespace vusc
