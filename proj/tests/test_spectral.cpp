#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dampwave/spectral.hpp"
#include "oracles.hpp"

using namespace dampwave;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Grid, DefaultOneDimensional) {
  const Grid g = make_grid(1, 200.0, 4096);
  EXPECT_NEAR(g.spacing(), 0.048828125, 1e-15);
  EXPECT_NEAR(g.max_frequency(), 64.3398, 1e-4);
  EXPECT_EQ(g.size(), 4096u);
  EXPECT_DOUBLE_EQ(g.spacing() * g.points_per_axis(), g.box_length());
}

TEST(Grid, ThreeDimensional) {
  const Grid g = make_grid(3, 50.0, 128);
  EXPECT_NEAR(g.max_frequency(), 8.0425, 1e-4);
  EXPECT_EQ(g.size(), 128u * 128u * 128u);
}

TEST(Grid, Rejections) {
  EXPECT_THROW(make_grid(1, 200.0, 32), DomainError);
  EXPECT_THROW(make_grid(4, 10.0, 64), DomainError);
  EXPECT_THROW(make_grid(0, 10.0, 64), DomainError);
  EXPECT_THROW(make_grid(1, 10.0, 100), DomainError);
  EXPECT_THROW(make_grid(1, -1.0, 64), DomainError);
  // pi * 128 / 100 ~ 4.02 is just inside
  EXPECT_NO_THROW(make_grid(1, 100.0, 128));
  EXPECT_THROW(make_grid(1, 101.0, 128), DomainError);
}

TEST(Transform, ConstantField) {
  const Grid g = make_grid(1, 200.0, 4096);
  Field one(g, std::vector<double>(g.size(), 1.0));
  const Spectrum s = forward(one);
  EXPECT_NEAR(s.coeffs[0].real(), 200.0 / std::sqrt(2 * kPi), 1e-10);
  for (std::size_t i = 1; i < s.coeffs.size(); ++i) ASSERT_LT(std::abs(s.coeffs[i]), 1e-10);
}

TEST(Transform, RoundTripRandom) {
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = make_grid(dim, 40.0, dim == 3 ? 64 : 128);
    const Field f = oracle::random_field(g, 11 + dim);
    const Field back = inverse(forward(f));
    double err = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) err = std::max(err, std::abs(back.values[i] - f.values[i]));
    EXPECT_LT(err, 1e-12 * lq_norm(f, kInfinity)) << "dim " << dim;
  }
}

TEST(Transform, GaussianPair) {
  const Grid g = make_grid(1, 200.0, 4096);
  const Field f = gaussian_data(g, 1.0, 1.0);
  const Spectrum s = forward(f);
  const double dk = g.frequency_step();
  double err = 0.0;
  for (int j = 0; j < g.points_per_axis(); ++j) {
    const double xi = dk * g.lattice_index(j);
    const double expect = std::exp(-xi * xi / 4.0) / std::sqrt(2.0);
    err = std::max(err, std::abs(s.coeffs[j] - Complex(expect, 0.0)));
  }
  EXPECT_LT(err, 1e-12);
}

TEST(Transform, GaussianPairTwoDimensional) {
  const Grid g = make_grid(2, 20.0, 128);
  const Field f = gaussian_data(g, 1.0, 1.0);
  const Spectrum s = forward(f);
  const auto xi2 = squared_frequencies(g);
  double err = 0.0;
  for (std::size_t i = 0; i < xi2.size(); ++i)
    err = std::max(err, std::abs(s.coeffs[i] - Complex(0.5 * std::exp(-xi2[i] / 4.0), 0.0)));
  EXPECT_LT(err, 1e-12);
}

TEST(Transform, HermitianSymmetry) {
  const Grid g = make_grid(2, 30.0, 64);
  const Field f = oracle::random_field(g, 5);
  const Spectrum s = forward(f);
  const int n = g.points_per_axis();
  double err = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int ma = (n - a) % n, mb = (n - b) % n;
      err = std::max(err, std::abs(s.coeffs[a * n + b] - std::conj(s.coeffs[ma * n + mb])));
    }
  EXPECT_LT(err, 1e-13 * lq_norm(f, kInfinity) * g.cell_volume() * g.size());
}

TEST(Transform, Parseval) {
  for (int dim = 1; dim <= 3; ++dim) {
    const Grid g = make_grid(dim, 30.0, 64);
    const Field f = oracle::random_field(g, 100 + dim);
    const Spectrum s = forward(f);
    double acc = 0.0;
    for (const auto& c : s.coeffs) acc += std::norm(c);
    const double l2sq = std::pow(lq_norm(f, 2.0), 2);
    EXPECT_LT(std::abs(l2sq - acc * parseval_weight(g)) / l2sq, 1e-10) << "dim " << dim;
  }
}

TEST(Transform, LengthMismatch) {
  const Grid g = make_grid(1, 20.0, 64);
  Field f(g);
  f.values.resize(10);
  EXPECT_THROW(forward(f), DomainError);
}

TEST(Norms, BoxFunction) {
  const Grid g = make_grid(1, 200.0, 4096);
  Field f(g);
  for (int j = 0; j < 4096; ++j) f.values[j] = std::abs(g.coordinate(j)) < 50.0 ? 1.0 : 0.0;
  EXPECT_NEAR(lq_norm(f, 1.0), 100.0, 0.1);
  EXPECT_DOUBLE_EQ(lq_norm(f, kInfinity), 1.0);
}

TEST(Norms, GaussianL2) {
  const Grid g = make_grid(1, 200.0, 4096);
  const Field f = gaussian_data(g, 1.0, 1.0);
  const double quad = std::sqrt(oracle::simpson([](double x) { return std::exp(-2 * x * x); }, -30.0, 30.0));
  EXPECT_NEAR(lq_norm(f, 2.0), quad, 1e-12);
  EXPECT_NEAR(lq_norm(f, 2.0), std::pow(kPi / 2.0, 0.25), 1e-12);
}

TEST(Norms, GeneralQAgainstQuadrature) {
  const Grid g = make_grid(1, 200.0, 4096);
  const Field f = gaussian_data(g, 3.0, 2.0);
  const double q = 3.5;
  const double quad =
      std::pow(oracle::simpson([q](double x) { return std::pow(3.0 * std::exp(-x * x / 4.0), q); }, -40.0, 40.0),
               1.0 / q);
  EXPECT_NEAR(lq_norm(f, q), quad, 1e-10);
}

TEST(Norms, RejectsSmallQ) {
  const Grid g = make_grid(1, 20.0, 64);
  EXPECT_THROW(lq_norm(Field(g), 0.5), DomainError);
}

TEST(Norms, Interpolation) {
  const Grid g = make_grid(1, 50.0, 256);
  for (unsigned seed = 0; seed < 100; ++seed) {
    const Field f = oracle::random_field(g, seed);
    const double n1 = lq_norm(f, 1.0), ninf = lq_norm(f, kInfinity);
    for (double q : {2.0, 4.0}) ASSERT_LE(lq_norm(f, q), std::pow(n1, 1 / q) * std::pow(ninf, 1 - 1 / q) * (1 + 1e-12));
  }
}

TEST(Sobolev, ZeroOrderIsLq) {
  const Grid g = make_grid(2, 20.0, 64);
  const Field f = oracle::random_field(g, 9);
  EXPECT_DOUBLE_EQ(sobolev_seminorm(f, 0.0, 3.0), lq_norm(f, 3.0));
}

TEST(Sobolev, SingleMode) {
  const Grid g = make_grid(1, 20.0, 128);
  const double omega = 5 * g.frequency_step();
  Field f(g);
  for (int j = 0; j < 128; ++j) f.values[j] = std::sin(omega * g.coordinate(j));
  EXPECT_NEAR(sobolev_seminorm(f, 1.0, 2.0), omega * lq_norm(f, 2.0), 1e-12);
}

TEST(Sobolev, HalfDerivativeParseval) {
  const Grid g = make_grid(1, 200.0, 4096);
  const Field f = gaussian_data(g, 1.0, 1.0);
  // |f^|^2 = e^{-xi^2/2}/2, so the lattice Parseval sum is the exact oracle.
  const double dk = g.frequency_step();
  double lattice = 0.0;
  for (int j = 0; j < 4096; ++j) {
    const double xi = dk * g.lattice_index(j);
    lattice += std::abs(xi) * 0.5 * std::exp(-xi * xi / 2) * dk;
  }
  const double got = std::pow(sobolev_seminorm(f, 0.5, 2.0), 2);
  EXPECT_NEAR(got, lattice, 1e-12);
  // The continuum integral differs by the trapezoid error at the kink of |xi|,
  // dk^2 / 12 * 2 * g(0).
  const double quad = oracle::simpson([](double xi) { return std::abs(xi) * 0.5 * std::exp(-xi * xi / 2); }, -40, 40);
  EXPECT_NEAR(quad - got, dk * dk / 12.0, 1e-6);
}

TEST(GaussianData, Basics) {
  const Grid g = make_grid(1, 200.0, 4096);
  EXPECT_EQ(lq_norm(gaussian_data(g, 0.0, 1.0), kInfinity), 0.0);
  EXPECT_DOUBLE_EQ(lq_norm(gaussian_data(g, 0.25, 3.0), kInfinity), 0.25);
  EXPECT_NEAR(lq_norm(gaussian_data(g, 1.0, 1.0), 1.0), std::sqrt(kPi), 1e-12);
  EXPECT_THROW(gaussian_data(g, 1.0, 0.1), DomainError);
  EXPECT_THROW(gaussian_data(g, 1.0, -1.0), DomainError);
  const std::vector<double> outside{150.0};
  EXPECT_THROW(gaussian_data(g, 1.0, 1.0, outside), DomainError);
}

TEST(GaussianData, WrapsPeriodically) {
  const Grid g = make_grid(1, 20.0, 128);
  const std::vector<double> c{9.5};
  const Field f = gaussian_data(g, 1.0, 1.0, c);
  // Mass is preserved by the minimum-image wrap.
  EXPECT_NEAR(lq_norm(f, 1.0), std::sqrt(kPi), 1e-10);
  EXPECT_GT(f.values[0], 0.5);
}

TEST(Monitor, BoundaryMass) {
  const Grid g = make_grid(1, 100.0, 512);
  EXPECT_LT(boundary_mass_fraction(gaussian_data(g, 1.0, 1.0)), 1e-12);
  Field flat(g, std::vector<double>(g.size(), 1.0));
  EXPECT_NEAR(boundary_mass_fraction(flat), 0.2, 0.01);
}
