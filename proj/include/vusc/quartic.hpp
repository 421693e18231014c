#pragma once

#include <array>
#include <complex>

namespace vusc {

using Mat4 = std::array<std::array<std::complex<double>, 4>, 4>;

/// Coefficients {c3, c2, c1, c0} of det(lambda I - A) = lambda^4 + c3 lambda^3
/// + c2 lambda^2 + c1 lambda + c0, by the Faddeev-LeVerrier recursion.
std::array<std::complex<double>, 4> characteristic_polynomial(const Mat4& a);

/// Roots of lambda^4 + c3 lambda^3 + c2 lambda^2 + c1 lambda + c0. A biquadratic
/// (c3 = c1 = 0) is solved directly so its roots come in exact +- pairs;
/// otherwise Ferrari's method followed by two Newton steps per root.
std::array<std::complex<double>, 4> quartic_roots(std::complex<double> c3, std::complex<double> c2,
                                                  std::complex<double> c1, std::complex<double> c0);

}  // namespace vusc
