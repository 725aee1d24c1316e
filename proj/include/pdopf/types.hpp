#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

namespace pdopf {

// Powers, rectangular voltages and admittances, all in per-unit.
using Complex = std::complex<double>;

inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Real bilinear pairing of a multiplier with a complex quantity:
// re*re + im*im. This is how every "lambda . S" term is evaluated.
inline double pair(Complex a, Complex b) {
  return a.real() * b.real() + a.imag() * b.imag();
}

inline double linf(Complex z) {
  return std::max(std::abs(z.real()), std::abs(z.imag()));
}

}  // namespace pdopf
