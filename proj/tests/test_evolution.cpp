#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dampwave/diagnostics.hpp"
#include "dampwave/evolution.hpp"
#include "dampwave/propagators.hpp"
#include "oracles.hpp"

using namespace dampwave;

namespace {

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

double max_abs(const Field& a) {
  double m = 0.0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  return m;
}

Field difference(const Field& a, const Field& b) {
  Field d(a.grid);
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
  return d;
}

EvolveConfig small_config(double p, double dt, double t_end) {
  EvolveConfig cfg;
  cfg.p = p;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.output_every = static_cast<int>(std::lround(1.0 / dt));
  return cfg;
}

}  // namespace

TEST(LinearEvolve, TimeZeroIsIdentity) {
  const Grid g = make_grid(1, 40.0, 256);
  const Field u0 = oracle::smooth_random_field(g, 3), u1 = oracle::smooth_random_field(g, 4);
  const State s = linear_evolve(u0, u1, 0.0);
  EXPECT_LT(max_abs_diff(s.u, u0), 1e-14);
  EXPECT_LT(max_abs_diff(s.v, u1), 1e-14);
  EXPECT_EQ(s.t, 0.0);
}

TEST(LinearEvolve, Eigenfunction) {
  const Grid g = make_grid(1, 2.0 * std::numbers::pi, 64);
  for (int k : {1, 3, 7}) {
    Field u0(g), u1(g);
    for (int j = 0; j < g.points_per_axis(); ++j) u0.values[j] = std::sin(k * g.coordinate(j));
    for (double t : {0.5, 4.0, 30.0}) {
      const State s = linear_evolve(u0, u1, t);
      const double s2 = static_cast<double>(k * k);
      for (int j = 0; j < g.points_per_axis(); ++j) {
        EXPECT_NEAR(s.u.values[j], k0(t, s2) * u0.values[j], 1e-13);
        EXPECT_NEAR(s.v.values[j], dk0(t, s2) * u0.values[j], 1e-13);
      }
    }
  }
}

TEST(LinearEvolve, PerModeMatchesModeIntegration) {
  const Grid g = default_grid(1);
  const Field u0(g);
  const Field u1 = gaussian_data(g, 1.0, 1.0);
  const Spectrum h1 = forward(u1);
  const auto s = squared_frequencies(g);
  double peak = 0.0;
  for (const auto& c : h1.coeffs) peak = std::max(peak, std::abs(c));
  for (double t : {1.0, 10.0, 100.0}) {
    const Spectrum hu = forward(linear_evolve(u0, u1, t).u);
    for (int j = 0; j < 200; j += 7) {
      const double v0 = h1.coeffs[j].real();
      if (std::abs(v0) < 1e-8) continue;
      const auto ref = oracle::mode_rk4(t, s[j], 0.0, 1.0);
      const double scale = std::max(std::abs(ref[0]), std::abs(ref[1]));
      // The transform pair adds an absolute floor of a few ulps of the peak.
      const double floor = 1e-14 * peak / std::abs(v0);
      EXPECT_NEAR(hu.coeffs[j].real() / v0, ref[0], 1e-7 * scale + floor) << "t=" << t << " j=" << j;
    }
  }
}

TEST(LinearEvolve, CocycleOnFields) {
  const Grid g = make_grid(2, 30.0, 64);
  const Field u0 = oracle::smooth_random_field(g, 11), u1 = oracle::smooth_random_field(g, 12);
  const State one = linear_evolve(u0, u1, 6.0);
  State step{u0, u1, 0.0};
  for (int k = 0; k < 8; ++k) step = linear_evolve(step.u, step.v, 0.75);
  const double scale = max_abs(one.u) + max_abs(one.v);
  EXPECT_LT(max_abs_diff(one.u, step.u), 1e-11 * scale);
  EXPECT_LT(max_abs_diff(one.v, step.v), 1e-11 * scale);
}

TEST(NonlinearEvolve, ZeroDataStaysZero) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field zero(g);
  const auto h = nonlinear_evolve(zero, zero, small_config(3.0, 0.1, 10.0));
  EXPECT_EQ(h.outcome, Outcome::Completed);
  ASSERT_EQ(h.size(), 11u);
  for (std::size_t k = 0; k < h.size(); ++k) {
    EXPECT_EQ(max_abs(h.snapshots[k].u), 0.0);
    EXPECT_EQ(h.f_l1_series[k], 0.0);
  }
}

TEST(NonlinearEvolve, LinearLimitIsExactForAnyStep) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 0.3, 1.0), u1 = gaussian_data(g, -0.2, 2.0);
  for (double dt : {0.5, 0.1, 0.025}) {
    EvolveConfig cfg = small_config(4.0, dt, 20.0);
    cfg.nonlinearity_scale = 0.0;
    const auto h = nonlinear_evolve(u0, u1, cfg);
    ASSERT_EQ(h.outcome, Outcome::Completed);
    for (std::size_t k = 0; k < h.size(); ++k) {
      const State ref = linear_evolve(u0, u1, h.times[k]);
      EXPECT_LT(max_abs_diff(h.snapshots[k].u, ref.u), 1e-12) << "dt=" << dt << " t=" << h.times[k];
      EXPECT_LT(max_abs_diff(h.snapshots[k].v, ref.v), 1e-12);
    }
  }
}

TEST(NonlinearEvolve, SecondOrderSelfConvergence) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 0.4, 1.0), u1 = gaussian_data(g, 0.4, 1.0);
  std::vector<Field> finals;
  for (double dt : {0.2, 0.1, 0.05}) {
    auto cfg = small_config(3.0, dt, 8.0);
    cfg.store_fields = true;
    const auto h = nonlinear_evolve(u0, u1, cfg);
    ASSERT_EQ(h.outcome, Outcome::Completed);
    finals.push_back(h.snapshots.back().u);
  }
  const double e1 = lq_norm(difference(finals[0], finals[1]), 2.0);
  const double e2 = lq_norm(difference(finals[1], finals[2]), 2.0);
  EXPECT_GT(e1 / e2, 3.4);
  EXPECT_LT(e1 / e2, 4.6);
}

TEST(NonlinearEvolve, StaysReal) {
  // Fields are real by construction; check the spectra keep Hermitian symmetry.
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 0.5, 1.5);
  const auto h = nonlinear_evolve(u0, u0, small_config(2.5, 0.1, 5.0));
  for (const auto& snap : h.snapshots) {
    const Spectrum sp = forward(snap.u);
    double imag = 0.0;
    inverse(sp, imag);
    EXPECT_LT(imag, 1e-12 * max_abs(snap.u) + 1e-300);
  }
}

TEST(NonlinearEvolve, LargeDataBlowsUp) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 5.0, 1.0);
  const auto h = nonlinear_evolve(u0, u0, small_config(2.0, 0.05, 20.0));
  EXPECT_EQ(h.outcome, Outcome::Blowup);
  EXPECT_GT(h.blowup_time, 0.0);
  EXPECT_LT(h.blowup_time, 20.0);
  EXPECT_EQ(h.times.back(), h.blowup_time);
}

TEST(NonlinearEvolve, ValidationNamesField) {
  const Grid g = make_grid(1, 64.0, 256);
  auto expect_field = [&](EvolveConfig cfg, const std::string& field) {
    try {
      validate(cfg, g);
      ADD_FAILURE() << "expected an error for " << field;
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto cfg = small_config(3.0, 0.1, 10.0);
  auto bad = cfg;
  bad.dt = 0.0;
  expect_field(bad, "dt");
  bad = cfg;
  bad.p = 1.0;
  expect_field(bad, "p");
  bad = cfg;
  bad.t_end = 10.0 * g.validity_window();
  expect_field(bad, "t_end");
  bad = cfg;
  bad.dealias_factor = 0.5;
  expect_field(bad, "dealias_factor");
  bad = cfg;
  bad.blowup_threshold = -1.0;
  expect_field(bad, "blowup_threshold");

  Field nan_data = gaussian_data(g, 1.0, 1.0);
  nan_data.values[3] = std::nan("");
  EXPECT_THROW(nonlinear_evolve(nan_data, Field(g), cfg), DomainError);
}

TEST(Picard, ZeroDataGivesZeroSeries) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field zero(g);
  const auto r = picard_iterate(zero, zero, small_config(4.0, 0.1, 10.0), 4);
  EXPECT_EQ(r.outcome, Outcome::Completed);
  ASSERT_EQ(r.contraction_series.size(), 4u);
  for (double d : r.contraction_series) EXPECT_EQ(d, 0.0);
}

TEST(Picard, SmallDataContracts) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 0.01, 1.0);
  const auto r = picard_iterate(u0, u0, small_config(4.0, 0.1, 30.0), 5);
  ASSERT_EQ(r.outcome, Outcome::Completed);
  const auto& c = r.contraction_series;
  ASSERT_EQ(c.size(), 5u);
  for (std::size_t k = 1; k < c.size(); ++k) {
    if (c[k - 1] < 1e-300) break;
    EXPECT_LT(c[k], c[k - 1]);
    EXPECT_LT(c[k] / c[k - 1], 0.5);
  }
}

TEST(Picard, FixedPointMatchesMarch) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 0.3, 1.0);
  const auto cfg = small_config(3.0, 0.1, 10.0);
  const auto r = picard_iterate(u0, u0, cfg, 8);
  ASSERT_EQ(r.outcome, Outcome::Completed);
  const auto march = nonlinear_evolve(u0, u0, cfg);
  const Field& fixed = r.iterates.back().snapshots.back().u;
  EXPECT_LT(max_abs_diff(fixed, march.snapshots.back().u), 1e-3 * max_abs(march.snapshots.back().u));
}

TEST(Picard, LargeDataDoesNotContract) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field u0 = gaussian_data(g, 10.0, 1.0);
  const auto r = picard_iterate(u0, u0, small_config(2.0, 0.05, 2.0), 4);
  if (r.outcome == Outcome::Blowup) {
    EXPECT_FALSE(r.message.empty());
    return;
  }
  const auto& c = r.contraction_series;
  double worst = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) worst = std::max(worst, c[k] / c[k - 1]);
  EXPECT_GT(worst, 1.0);
}

TEST(Picard, RequiresTwoIterations) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field zero(g);
  EXPECT_THROW(picard_iterate(zero, zero, small_config(4.0, 0.1, 1.0), 1), DomainError);
}
