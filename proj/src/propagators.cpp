#include "dampwave/propagators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dampwave {

CharacteristicRoots characteristic_roots(double s) { return {-1.0, -s}; }

double heat(double t, double s) {
  const double x = t * s;
  return x > kUnderflowExponent ? 0.0 : std::exp(-x);
}

double k1(double t, double s) {
  const double eps = s - 1.0;
  if (std::abs(eps) <= kBranchHalfWidth) {
    // Taylor expansion of t e^{-t} phi_1(-eps t) around s = 1, summed until
    // the terms drop below roundoff.
    const double z = -eps * t;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 2; k < 40 && std::abs(term) > 1e-17 * std::abs(sum); ++k) {
      term *= z / k;
      sum += term;
    }
    return t * heat(t, 1.0) * sum;
  }
  // (e^{-ts} - e^{-t}) / (1 - s) = e^{-t min(s,1)} (1 - e^{-t|s-1|}) / |s-1|
  const double a = std::abs(eps);
  return heat(t, std::min(s, 1.0)) * (-std::expm1(-a * t)) / a;
}

double k0(double t, double s) { return heat(t, 1.0) + k1(t, s); }

double dk0(double t, double s) { return -s * k1(t, s); }

double dk1(double t, double s) { return heat(t, s) - k1(t, s); }

Transfer transfer(double t, double s) {
  const double kk1 = k1(t, s);
  const double h = heat(t, s);
  return {heat(t, 1.0) + kk1, kk1, -s * kk1, h - kk1};
}

double phi1(double z) {
  if (z == 0.0) return 1.0;
  return std::expm1(z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 0.5) {
    // sum_k z^k / (k+2)!
    double term = 0.5;
    double sum = term;
    for (int k = 1; k < 24; ++k) {
      term *= z / (k + 2);
      sum += term;
    }
    return sum;
  }
  return (std::expm1(z) - z) / (z * z);
}

namespace {

constexpr double kQuadratureBand = 0.05;

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

template <typename Fn>
double gauss_legendre(double a, double b, Fn&& fn) {
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.25)));
  const double width = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) acc += kGlWeights[i] * fn(mid + 0.5 * width * kGlNodes[i]);
  }
  return 0.5 * width * acc;
}

}  // namespace

double k1_integral(double h, double s) {
  if (std::abs(s - 1.0) < kQuadratureBand) return gauss_legendre(0.0, h, [s](double tau) { return k1(tau, s); });
  return h * (phi1(-s * h) - phi1(-h)) / (1.0 - s);
}

double k1_ramp_integral(double h, double s) {
  if (std::abs(s - 1.0) < kQuadratureBand)
    return gauss_legendre(0.0, h, [s, h](double tau) { return k1(tau, s) * (h - tau); }) / h;
  return h * (phi2(-s * h) - phi2(-h)) / (1.0 - s);
}

Spectrum apply_multiplier(const Multiplier& m, double t, const Spectrum& spectrum) {
  Spectrum out = spectrum;
  const auto s = squared_frequencies(spectrum.grid);
  for (std::size_t i = 0; i < s.size(); ++i) out.coeffs[i] *= m(t, s[i]);
  return out;
}

Field apply_multiplier(const Multiplier& m, double t, const Field& field) {
  double residue = 0.0;
  Field out = inverse(apply_multiplier(m, t, forward(field)), residue);
  const double scale = std::max(lq_norm(field, kInfinity), lq_norm(out, kInfinity));
  if (residue > 1e-12 * scale) throw std::logic_error("apply_multiplier: imaginary residue, multiplier is not radial");
  return out;
}

Multiplier localized(int j, Band band) {
  if (j != 0 && j != 1) throw DomainError("localized: j must be 0 or 1");
  if (j == 0) return [band](double t, double s) { return k0(t, s) * eval_cutoff(band, std::sqrt(s)); };
  return [band](double t, double s) { return k1(t, s) * eval_cutoff(band, std::sqrt(s)); };
}

Field localized_multiplier(int j, Band band, double t, const Field& field) {
  return apply_multiplier(localized(j, band), t, field);
}

double heat_kernel(double t, std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return std::pow(4.0 * std::numbers::pi * t, -0.5 * static_cast<double>(x.size())) * std::exp(-r2 / (4.0 * t));
}

Field heat_kernel_field(const Grid& grid, double t, double mass) {
  if (!(t > 0.0) || t > grid.validity_window())
    throw DomainError("heat_kernel_field: t outside the validity window (0, " +
                      std::to_string(grid.validity_window()) + "]");
  if (mass == 0.0) return Field(grid);
  Spectrum spec(grid);
  const auto s = squared_frequencies(grid);
  const double c = mass * std::pow(2.0 * std::numbers::pi, -0.5 * grid.dim());
  for (std::size_t i = 0; i < s.size(); ++i) spec.coeffs[i] = c * heat(t, s[i]);
  return inverse(spec);
}

}  // namespace dampwave
