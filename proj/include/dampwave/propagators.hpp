#pragma once

#include <functional>
#include <span>

#include "dampwave/cutoffs.hpp"
#include "dampwave/spectral.hpp"

namespace dampwave {

/// Half-width of the window around s = |xi|^2 = 1 where the evolution
/// multipliers switch to their Taylor expansion.
inline constexpr double kBranchHalfWidth = 1e-4;

/// Exponent beyond which exp(-x) is flushed to zero.
inline constexpr double kUnderflowExponent = 745.0;

/// Characteristic roots of lambda^2 + (1 + s) lambda + s = 0, as an
/// unordered pair {-1, -s}.
struct CharacteristicRoots {
  double first;
  double second;
};
CharacteristicRoots characteristic_roots(double s);

/// exp(-t s) with underflow clamped to zero.
double heat(double t, double s);

/// Evolution multipliers as functions of (t, s = |xi|^2).
///   K1 = (e^{-ts} - e^{-t}) / (1 - s),  K0 = (e^{-ts} - s e^{-t}) / (1 - s)
///   dK0 = -s K1,  dK1 = (e^{-t} - s e^{-ts}) / (1 - s)
double k0(double t, double s);
double k1(double t, double s);
double dk0(double t, double s);
double dk1(double t, double s);

/// Transfer matrix [[K0, K1], [dK0, dK1]] acting on (u^, v^).
struct Transfer {
  double uu, uv, vu, vv;
};
Transfer transfer(double t, double s);

/// Exact integrals of K1 against the constant and linear-ramp weights on
/// [0, h]:  int_0^h K1(tau) dtau  and  (1/h) int_0^h K1(tau) (h - tau) dtau.
double k1_integral(double h, double s);
double k1_ramp_integral(double h, double s);

/// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2.
double phi1(double z);
double phi2(double z);

using Multiplier = std::function<double(double t, double s)>;

/// F^{-1}[ m(t, |xi|^2) F g ]. Throws std::logic_error if the inverse leaves
/// an imaginary residue above 1e-12 relative (the multiplier was not radial).
Field apply_multiplier(const Multiplier& m, double t, const Field& field);
Spectrum apply_multiplier(const Multiplier& m, double t, const Spectrum& spectrum);

/// K_j chi_band applied to a field (j = 0 or 1).
Field localized_multiplier(int j, Band band, double t, const Field& field);
Multiplier localized(int j, Band band);

/// Gauss kernel (4 pi t)^{-n/2} exp(-|x|^2 / (4t)).
double heat_kernel(double t, std::span<const double> x);

/// mass * G_t sampled on the torus, built from its spectrum so that the
/// periodization matches the box. Requires 0 < t <= validity window.
Field heat_kernel_field(const Grid& grid, double t, double mass);

}  // namespace dampwave
