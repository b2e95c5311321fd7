#include "dampwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dampwave/fft_engine.hpp"

namespace dampwave {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

double Grid::frequency_step() const { return 2.0 * std::numbers::pi / box_length_; }

double Grid::max_frequency() const { return std::numbers::pi * points_ / box_length_; }

std::size_t Grid::size() const {
  std::size_t total = 1;
  for (int d = 0; d < dim_; ++d) total *= static_cast<std::size_t>(points_);
  return total;
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }

double Grid::validity_window() const { return (box_length_ / 8.0) * (box_length_ / 8.0); }

Grid Grid::refined(double factor) const {
  const double scaled = factor * points_;
  const int fine = static_cast<int>(std::lround(scaled));
  if (factor < 1.0 || std::abs(scaled - fine) > 1e-9 || fine % 2 != 0)
    throw DomainError("refined: factor must be >= 1 and give an even number of points");
  return Grid(dim_, box_length_, fine);
}

Grid make_grid(int dim, double box_length, int points_per_axis) {
  if (dim < 1 || dim > 3) throw DomainError("make_grid: dim must be 1, 2 or 3, got " + std::to_string(dim));
  if (!(box_length > 0.0) || !std::isfinite(box_length)) throw DomainError("make_grid: box_length must be positive");
  if (!is_power_of_two(points_per_axis) || points_per_axis < 64)
    throw DomainError("make_grid: points_per_axis must be a power of two >= 64, got " +
                      std::to_string(points_per_axis));
  Grid grid(dim, box_length, points_per_axis);
  if (grid.max_frequency() <= 4.0)
    throw DomainError("make_grid: max |xi| = " + std::to_string(grid.max_frequency()) +
                      " <= 4 leaves the high-frequency band empty");
  return grid;
}

Grid default_grid(int dim) {
  switch (dim) {
    case 1: return make_grid(1, 200.0, 4096);
    case 2: return make_grid(2, 100.0, 512);
    case 3: return make_grid(3, 50.0, 128);
    default: throw DomainError("default_grid: dim must be 1, 2 or 3");
  }
}

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw DomainError("Field: length does not match grid");
}

Spectrum forward(const Field& field) {
  if (field.values.size() != field.grid.size()) throw DomainError("forward: length does not match grid");
  Spectrum out(field.grid);
  std::transform(field.values.begin(), field.values.end(), out.coeffs.begin(),
                 [](double v) { return Complex(v, 0.0); });
  detail::fft_inplace(field.grid, out.coeffs, -1);
  detail::to_continuum(field.grid, out.coeffs);
  return out;
}

Field inverse(const Spectrum& spectrum, double& max_imag) {
  if (spectrum.coeffs.size() != spectrum.grid.size()) throw DomainError("inverse: length does not match grid");
  std::vector<Complex> work = spectrum.coeffs;
  detail::from_continuum(spectrum.grid, work);
  detail::fft_inplace(spectrum.grid, work, +1);
  Field out(spectrum.grid);
  max_imag = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    out.values[i] = work[i].real();
    max_imag = std::max(max_imag, std::abs(work[i].imag()));
  }
  return out;
}

Field inverse(const Spectrum& spectrum) {
  double ignored = 0.0;
  return inverse(spectrum, ignored);
}

std::vector<double> squared_frequencies(const Grid& grid) {
  const int n = grid.points_per_axis();
  const double dk = grid.frequency_step();
  std::vector<double> axis(n);
  for (int j = 0; j < n; ++j) {
    const double xi = dk * grid.lattice_index(j);
    axis[j] = xi * xi;
  }
  std::vector<double> out(grid.size());
  std::size_t idx = 0;
  if (grid.dim() == 1) {
    out = axis;
  } else if (grid.dim() == 2) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) out[idx++] = axis[a] + axis[b];
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) out[idx++] = axis[a] + axis[b] + axis[c];
  }
  return out;
}

std::array<double, 3> position(const Grid& grid, std::size_t idx) {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  const std::size_t n = static_cast<std::size_t>(grid.points_per_axis());
  for (int d = grid.dim() - 1; d >= 0; --d) {
    x[d] = grid.coordinate(static_cast<int>(idx % n));
    idx /= n;
  }
  return x;
}

double lq_norm(const Grid& grid, std::span<const double> values, double q) {
  if (!(q >= 1.0)) throw DomainError("lq_norm: q must be >= 1 or infinity");
  if (values.size() != grid.size()) throw DomainError("lq_norm: length does not match grid");
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  const double w = grid.cell_volume();
  double acc = 0.0;
  if (q == 1.0) {
    for (double v : values) acc += std::abs(v);
    return acc * w;
  }
  if (q == 2.0) {
    for (double v : values) acc += v * v;
    return std::sqrt(acc * w);
  }
  // Scale by the max so large q does not overflow.
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  for (double v : values) acc += std::pow(std::abs(v) / m, q);
  return m * std::pow(acc * w, 1.0 / q);
}

double lq_norm(const Field& field, double q) { return lq_norm(field.grid, field.values, q); }

double sobolev_seminorm(const Field& field, double k, double q) {
  if (!(k >= 0.0)) throw DomainError("sobolev_seminorm: k must be nonnegative");
  if (k == 0.0) return lq_norm(field, q);
  Spectrum spec = forward(field);
  const auto s = squared_frequencies(field.grid);
  for (std::size_t i = 0; i < s.size(); ++i) spec.coeffs[i] *= s[i] == 0.0 ? 0.0 : std::pow(s[i], 0.5 * k);
  return lq_norm(inverse(spec), q);
}

double integral(const Field& field) {
  double acc = 0.0;
  for (double v : field.values) acc += v;
  return acc * field.grid.cell_volume();
}

double boundary_mass_fraction(const Field& field) {
  const Grid& g = field.grid;
  const double edge = 0.4 * g.box_length();
  double total = 0.0;
  double outer = 0.0;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double a = std::abs(field.values[i]);
    total += a;
    const auto x = position(g, i);
    bool near = false;
    for (int d = 0; d < g.dim(); ++d) near = near || std::abs(x[d]) > edge;
    if (near) outer += a;
  }
  return total > 0.0 ? outer / total : 0.0;
}

Field gaussian_data(const Grid& grid, double amplitude, double width, std::span<const double> center) {
  if (!(width > 0.0)) throw DomainError("gaussian_data: width must be positive");
  if (2.0 * width / grid.spacing() < 8.0)
    throw DomainError("gaussian_data: fewer than 8 samples across the Gaussian width (aliasing guard)");
  std::array<double, 3> c{0.0, 0.0, 0.0};
  if (!center.empty()) {
    if (static_cast<int>(center.size()) != grid.dim()) throw DomainError("gaussian_data: center has wrong dimension");
    for (int d = 0; d < grid.dim(); ++d) {
      if (center[d] < -0.5 * grid.box_length() || center[d] >= 0.5 * grid.box_length())
        throw DomainError("gaussian_data: center outside the box");
      c[d] = center[d];
    }
  }
  Field out(grid);
  if (amplitude == 0.0) return out;
  const double L = grid.box_length();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto x = position(grid, i);
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) {
      double dx = x[d] - c[d];
      dx -= L * std::round(dx / L);
      r2 += dx * dx;
    }
    out.values[i] = amplitude * std::exp(-r2 / (width * width));
  }
  return out;
}

double parseval_weight(const Grid& grid) { return std::pow(grid.frequency_step(), grid.dim()); }

}  // namespace dampwave
