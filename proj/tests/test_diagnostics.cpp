#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dampwave/diagnostics.hpp"
#include "dampwave/propagators.hpp"

using namespace dampwave;

namespace {

EvolveConfig run_config(double p, double t_end, double scale) {
  EvolveConfig cfg = default_evolve_config(1, t_end);
  cfg.p = p;
  cfg.nonlinearity_scale = scale;
  return cfg;
}

// History of the heat flow G_{1+t} recorded by hand.
StateHistory heat_history(const Grid& g, double t_end, int count) {
  StateHistory h;
  h.grid = g;
  h.p = 2.0;
  for (int k = 0; k <= count; ++k) {
    const double t = t_end * k / count;
    const Field u = heat_kernel_field(g, 1.0 + t, 1.0);
    h.times.push_back(t);
    h.snapshots.push_back({u, Field(g), t});
    h.u_l1.push_back(lq_norm(u, 1.0));
    h.u_l2.push_back(lq_norm(u, 2.0));
    h.u_inf.push_back(lq_norm(u, kInfinity));
    h.f_l1_series.push_back(0.0);
    h.f_mass_series.push_back(0.0);
    h.boundary_fraction.push_back(boundary_mass_fraction(u));
  }
  return h;
}

const std::vector<double> kQ{1.0, 2.0, kInfinity};

}  // namespace

TEST(FitPowerLaw, ExactPowerLaw) {
  std::vector<double> t, y;
  for (int k = 0; k <= 50; ++k) {
    t.push_back(2.0 * k);
    y.push_back(3.0 * std::pow(1.0 + t.back(), -0.7));
  }
  const auto [slope, used] = fit_power_law(t, y, {});
  EXPECT_NEAR(slope, -0.7, 1e-12);
  EXPECT_EQ(used, 26u);
  const auto [s2, u2] = fit_power_law(t, y, {10.0, 20.0});
  EXPECT_NEAR(s2, -0.7, 1e-12);
  EXPECT_EQ(u2, 6u);
}

TEST(DecayReport, HeatFlowScaling) {
  const auto h = heat_history(default_grid(1), 100.0, 100);
  const auto r = decay_report(h, kQ);
  ASSERT_EQ(r.series.size(), 3u);
  EXPECT_NEAR(r.series[0].fitted_exponent, 0.0, 1e-6);
  EXPECT_NEAR(r.series[1].fitted_exponent, -0.25, 0.01);
  EXPECT_NEAR(r.series[2].fitted_exponent, -0.5, 0.01);
  EXPECT_EQ(r.series[2].expected_exponent, -0.5);
  EXPECT_GE(r.series[2].fit_points, 20u);
}

TEST(DecayReport, LinearDampedWave) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 1.0, 1.0);
  const auto h = nonlinear_evolve(u0, u0, run_config(4.0, 100.0, 0.0));
  const auto r = decay_report(h, kQ);
  EXPECT_NEAR(r.series[1].fitted_exponent, -0.25, 0.05);
  EXPECT_NEAR(r.series[2].fitted_exponent, -0.5, 0.05);
  for (const auto& s : r.series) EXPECT_TRUE(std::isfinite(s.scaled_sup));
}

TEST(DecayReport, RejectsBadHistories) {
  const Grid g = make_grid(1, 64.0, 256);
  auto h = heat_history(g, 30.0, 30);
  EXPECT_THROW(decay_report(h, kQ), DomainError);  // too few snapshots
  h = heat_history(g, 30.0, 60);
  h.outcome = Outcome::Blowup;
  EXPECT_THROW(decay_report(h, kQ), DomainError);
}

TEST(MassM, ZeroData) {
  const Grid g = make_grid(1, 64.0, 256);
  const Field zero(g);
  EvolveConfig cfg = default_evolve_config(1, 20.0);
  const auto h = nonlinear_evolve(zero, zero, cfg);
  const auto m = mass_M(zero, zero, h);
  EXPECT_EQ(m.total, 0.0);
  EXPECT_FALSE(m.extrapolated);
}

TEST(MassM, LinearRunHasUnitMassAndIsConserved) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 0.5 / std::sqrt(std::numbers::pi), 1.0);
  const auto full = nonlinear_evolve(u0, u0, run_config(4.0, 100.0, 0.0));
  const auto half = nonlinear_evolve(u0, u0, run_config(4.0, 50.0, 0.0));
  const auto mf = mass_M(u0, u0, full), mh = mass_M(u0, u0, half);
  EXPECT_NEAR(mf.total, 1.0, 1e-12);
  EXPECT_EQ(mf.nonlinear_truncated, 0.0);
  EXPECT_EQ(mf.linear, mh.linear);
  EXPECT_EQ(mf.total, mh.total);
}

TEST(MassM, NonlinearPartSmallAndPositive) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 0.01, 1.0);
  const auto h = nonlinear_evolve(u0, u0, run_config(4.0, 100.0, 1.0));
  const auto m = mass_M(u0, u0, h);
  EXPECT_GT(m.nonlinear_truncated, 0.0);
  EXPECT_LT(m.nonlinear_truncated, m.linear);
  EXPECT_TRUE(m.extrapolated);
  EXPECT_GT(m.tail, 0.0);
  EXPECT_NEAR(m.fitted_gamma, m.expected_gamma, 0.3);
}

TEST(XNorm, Definitions) {
  const Grid g = make_grid(1, 64.0, 256);
  StateHistory empty;
  empty.grid = g;
  EXPECT_EQ(x_norm(empty), 0.0);

  const Field zero(g);
  const auto hz = nonlinear_evolve(zero, zero, default_evolve_config(1, 10.0));
  EXPECT_EQ(x_norm(hz), 0.0);

  const Field u0 = gaussian_data(g, 0.7, 1.3);
  StateHistory one;
  one.grid = g;
  one.times = {0.0};
  one.u_l1 = {lq_norm(u0, 1.0)};
  one.u_inf = {lq_norm(u0, kInfinity)};
  EXPECT_DOUBLE_EQ(x_norm(one), lq_norm(u0, 1.0) + lq_norm(u0, kInfinity));
}

TEST(XNorm, SmallDataCloseToLinear) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 0.01, 1.0);
  const double lin = x_norm(nonlinear_evolve(u0, u0, run_config(4.0, 100.0, 0.0)));
  const double non = x_norm(nonlinear_evolve(u0, u0, run_config(4.0, 100.0, 1.0)));
  EXPECT_GT(non, lin);
  EXPECT_LT(non, 2.0 * lin);
}

TEST(ProfileReport, LinearErrorDecreasesAndPartsVanish) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 1.0, 1.0);
  EvolveConfig cfg = run_config(4.0, 100.0, 0.0);
  cfg.store_forcing = true;
  const auto h = nonlinear_evolve(u0, u0, cfg);
  const double dt_out = h.times[1] - h.times[0];
  const std::vector<double> a_times{h.times[20], h.times[100]};
  ASSERT_NEAR(a_times[0], 20 * dt_out, 1e-9);
  const auto r = profile_report(h, u0, u0, kQ, a_times);

  auto at = [&](double t) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      if (std::abs(r.times[k] - t) < std::abs(r.times[best] - t)) best = k;
    return r.scaled_error[2][best];
  };
  EXPECT_LT(at(100.0), 0.5 * at(10.0));
  for (int j = 0; j < kProfileParts; ++j)
    for (const auto& series : r.a_norms[j])
      for (double v : series) EXPECT_EQ(v, 0.0) << "A" << j + 1;
  EXPECT_EQ(r.completeness_error, 0.0);
}

TEST(ProfileReport, DecompositionIsComplete) {
  const Grid g = default_grid(1);
  const Field u0 = gaussian_data(g, 0.2, 1.0);
  EvolveConfig cfg = run_config(4.0, 40.0, 1.0);
  cfg.store_forcing = true;
  const auto h = nonlinear_evolve(u0, u0, cfg);
  ASSERT_EQ(h.outcome, Outcome::Completed);
  const std::vector<double> a_times{h.times[40], h.times.back()};
  const auto r = profile_report(h, u0, u0, kQ, a_times);
  double scale = 0.0;
  for (int j = 0; j < kProfileParts; ++j) scale = std::max(scale, r.a_norms[j][2].back());
  EXPECT_GT(scale, 0.0);
  EXPECT_LT(r.completeness_error, 1e-10 * std::max(1.0, scale));

  EXPECT_THROW(profile_report(h, u0, u0, kQ, std::vector<double>{h.times[41]}), DomainError);
}

TEST(Fujita, ClassifyTail) {
  const std::vector<double> down{5, 4, 3, 2.5, 2, 1.9, 1.8, 1.7};
  const std::vector<double> up{5, 4, 3, 2.5, 2, 2.1, 2.2, 2.3};
  EXPECT_EQ(classify_tail(down), "decayed");
  EXPECT_EQ(classify_tail(up), "growing");
  EXPECT_THROW(classify_tail(std::vector<double>{1, 2}), DomainError);
}

TEST(Fujita, RejectsBadSweeps) {
  const std::vector<double> straddle{2.0, 4.0}, above{4.0, 5.0};
  EXPECT_THROW(fujita_classify(1, straddle, 0.0, 10.0), DomainError);
  EXPECT_THROW(fujita_classify(1, straddle, -1.0, 10.0), DomainError);
  EXPECT_THROW(fujita_classify(1, above, 0.1, 10.0), DomainError);
}
