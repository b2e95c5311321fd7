#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dampwave {

using Complex = std::complex<double>;

/// Raised when an argument violates a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Periodic box [-L/2, L/2)^dim sampled with N points per axis.
///
/// Frequencies along each axis are xi_k = 2*pi*k/L for k in [-N/2, N/2);
/// array index j maps to k = j for j < N/2 and k = j - N otherwise.
/// Storage is row-major with the last axis fastest.
class Grid {
 public:
  Grid() = default;

  int dim() const { return dim_; }
  double box_length() const { return box_length_; }
  int points_per_axis() const { return points_; }
  double spacing() const { return box_length_ / points_; }
  double frequency_step() const;
  double max_frequency() const;
  std::size_t size() const;

  /// Quadrature weight spacing^dim.
  double cell_volume() const;

  /// Signed lattice integer of array index j along one axis.
  int lattice_index(int j) const { return j < points_ / 2 ? j : j - points_; }
  double coordinate(int j) const { return -0.5 * box_length_ + j * spacing(); }

  /// Largest t for which the torus is trusted as a stand-in for R^n.
  double validity_window() const;

  /// Same box with the resolution multiplied by `factor` (must give an even
  /// integer); used for zero-padded nonlinear products.
  Grid refined(double factor) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  friend Grid make_grid(int dim, double box_length, int points_per_axis);
  Grid(int dim, double box_length, int points) : dim_(dim), box_length_(box_length), points_(points) {}

  int dim_ = 1;
  double box_length_ = 1.0;
  int points_ = 2;
};

Grid make_grid(int dim, double box_length, int points_per_axis);

/// Default desk-scale grid for a dimension (n=1: 200/4096, n=2: 100/512,
/// n=3: 50/128).
Grid default_grid(int dim);

/// Real samples over a grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.size(), 0.0) {}
  Field(const Grid& g, std::vector<double> v);
};

/// Fourier coefficients in the continuum convention
/// f^(xi) = (2 pi)^{-n/2} int e^{-i x.xi} f(x) dx, approximated by the
/// trapezoid rule on the box.
struct Spectrum {
  Grid grid;
  std::vector<Complex> coeffs;

  Spectrum() = default;
  explicit Spectrum(const Grid& g) : grid(g), coeffs(g.size(), Complex{}) {}
};

Spectrum forward(const Field& field);
Field inverse(const Spectrum& spectrum);

/// Imaginary residue of an inverse transform, before it is discarded.
Field inverse(const Spectrum& spectrum, double& max_imag);

/// |xi|^2 for every mode, in storage order.
std::vector<double> squared_frequencies(const Grid& grid);

/// Physical coordinates of flat index `idx`.
std::array<double, 3> position(const Grid& grid, std::size_t idx);

/// L^q norm with the trapezoid weight; q = kInfinity gives the max norm.
double lq_norm(const Field& field, double q);
double lq_norm(const Grid& grid, std::span<const double> values, double q);

/// || |grad|^k f ||_q with |grad|^k the multiplier |xi|^k (zero mode -> 0).
double sobolev_seminorm(const Field& field, double k, double q);

/// Integral of the field over the box.
double integral(const Field& field);

/// Fraction of ||u||_1 carried by points within 10% of the box boundary.
double boundary_mass_fraction(const Field& field);

/// amplitude * exp(-|x - center|^2 / width^2) with minimum-image distance.
Field gaussian_data(const Grid& grid, double amplitude, double width, std::span<const double> center = {});

/// Parseval factor: sum |f^_k|^2 * frequency_step^dim equals ||f||_2^2.
double parseval_weight(const Grid& grid);

}  // namespace dampwave
