#pragma once

// Closed-form references shared by the unit tests and the acceptance run.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "vusc/materials.hpp"
#include "vusc/quartic.hpp"
#include "vusc/units.hpp"

namespace oracle {

using vusc::cplx;

struct Airy {
  double T;
  double R;
};

// Multiple-reflection sum for one slab in terms of tangential admittances
// (n cos for s, n / cos for p).
inline Airy airy(cplx n1, cplx n2, cplx n3, double d_um, double k, double angle_deg, bool p_pol) {
  const cplx s = n1 * std::sin(angle_deg * vusc::units::kPi / 180.0);
  auto cosv = [&](cplx n) { return vusc::passive_sqrt(1.0 - (s / n) * (s / n)); };
  auto eta = [&](cplx n) { return p_pol ? n / cosv(n) : n * cosv(n); };
  const cplx e1 = eta(n1), e2 = eta(n2), e3 = eta(n3);
  const cplx r12 = (e1 - e2) / (e1 + e2), r23 = (e2 - e3) / (e2 + e3);
  const cplx t12 = 2.0 * e1 / (e1 + e2), t23 = 2.0 * e2 / (e2 + e3);
  const cplx delta = vusc::units::kTwoPi * k * n2 * cosv(n2) * vusc::units::um_to_cm(d_um);
  const cplx ph = std::exp(cplx{0, 1} * delta);
  const cplx den = 1.0 + r12 * r23 * ph * ph;
  const cplx t = t12 * t23 * ph / den;
  const cplx r = (r12 + r23 * ph * ph) / den;
  return {(e3.real() / e1.real()) * std::norm(t), std::norm(r)};
}

// Eigenvalues by Eigen's complex QR, sorted by real part.
inline std::vector<cplx> eigenvalues(const vusc::Mat4& m) {
  Eigen::Matrix4cd a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = m[i][j];
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(a, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(ev.begin(), ev.end(), [](cplx x, cplx y) { return x.real() < y.real(); });
  return ev;
}

// Positive roots of w^4 - (wc^2 + wv^2 + 4 W^2) w^2 + wc^2 wv^2 = 0: a cavity
// filled with a lossless Lorentz medium of plasma coupling 2W.
inline std::pair<double, double> lorentz_medium(double wc, double wv, double W) {
  const double b = wc * wc + wv * wv + 4 * W * W;
  const double disc = std::sqrt(b * b - 4 * wc * wc * wv * wv);
  return {std::sqrt((b - disc) / 2), std::sqrt((b + disc) / 2)};
}

}  // namespace oracle
