#include <gtest/gtest.h>

#include <cmath>

#include "dampwave/cutoffs.hpp"
#include "dampwave/spectral.hpp"

using namespace dampwave;

TEST(Cutoffs, PlateauValues) {
  EXPECT_EQ(eval_cutoff(Band::Low, 0.4), 1.0);
  EXPECT_EQ(eval_cutoff(Band::Low, 0.5), 1.0);
  EXPECT_EQ(eval_cutoff(Band::Low, 0.75), 0.0);
  EXPECT_EQ(eval_cutoff(Band::High, 3.5), 1.0);
  EXPECT_EQ(eval_cutoff(Band::High, 2.0), 0.0);
  EXPECT_EQ(eval_cutoff(Band::Mid, 1.0), 1.0);
  EXPECT_EQ(eval_cutoff(Band::Mid, 0.1), 0.0);
  EXPECT_EQ(eval_cutoff(Band::Mid, 10.0), 0.0);
}

TEST(Cutoffs, StepProfileClosedForm) {
  // psi(1/2) = 1/2 by symmetry; psi(1/4) from h(s) = e^{-1/s}.
  EXPECT_DOUBLE_EQ(cutoff_detail::step(0.5), 0.5);
  const double h1 = std::exp(-4.0), h2 = std::exp(-4.0 / 3.0);
  EXPECT_NEAR(cutoff_detail::step(0.25), h1 / (h1 + h2), 1e-15);
}

TEST(Cutoffs, PartitionOfUnity) {
  for (int i = 0; i < 10000; ++i) {
    const double r = 5.0 * i / 9999.0;
    const double sum = eval_cutoff(Band::Low, r) + eval_cutoff(Band::Mid, r) + eval_cutoff(Band::High, r);
    ASSERT_NEAR(sum, 1.0, 1e-15) << "r=" << r;
    for (Band b : {Band::Low, Band::Mid, Band::High}) {
      const double v = eval_cutoff(b, r);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Cutoffs, DerivativePlateaus) {
  EXPECT_EQ(eval_cutoff_derivative(Band::Low, 1, 0.3), 0.0);
  EXPECT_EQ(eval_cutoff_derivative(Band::High, 2, 5.0), 0.0);
  EXPECT_THROW(eval_cutoff_derivative(Band::Low, 3, 0.6), DomainError);
  EXPECT_THROW(eval_cutoff_derivative(Band::Mid, 1, 0.6), DomainError);
  EXPECT_THROW(eval_cutoff(Band::Low, -0.1), DomainError);
}

TEST(Cutoffs, DerivativeSupports) {
  for (int i = 0; i <= 5000; ++i) {
    const double r = 4.0 * i / 5000.0;
    for (int order : {1, 2}) {
      if (r <= 0.5 || r >= 0.75) ASSERT_EQ(eval_cutoff_derivative(Band::Low, order, r), 0.0) << r;
      if (r <= 2.0 || r >= 3.0) ASSERT_EQ(eval_cutoff_derivative(Band::High, order, r), 0.0) << r;
    }
  }
}

TEST(Cutoffs, DerivativesMatchFiniteDifferences) {
  const double h = 1e-5;
  auto fd1 = [h](Band b, double r) { return (eval_cutoff(b, r + h) - eval_cutoff(b, r - h)) / (2 * h); };
  auto fd2 = [](Band b, double r) {
    const double hh = 1e-4;
    return (eval_cutoff(b, r + hh) - 2 * eval_cutoff(b, r) + eval_cutoff(b, r - hh)) / (hh * hh);
  };
  const double d = eval_cutoff_derivative(Band::Low, 1, 0.625);
  EXPECT_LT(d, 0.0);
  EXPECT_NEAR(d, fd1(Band::Low, 0.625), 1e-6);
  for (double r : {0.55, 0.6, 0.7, 0.74}) {
    EXPECT_NEAR(eval_cutoff_derivative(Band::Low, 1, r), fd1(Band::Low, r), 1e-6) << r;
    EXPECT_NEAR(eval_cutoff_derivative(Band::Low, 2, r), fd2(Band::Low, r), 2e-4 * std::max(1.0, std::abs(fd2(Band::Low, r)))) << r;
  }
  for (double r : {2.1, 2.5, 2.9}) {
    EXPECT_NEAR(eval_cutoff_derivative(Band::High, 1, r), fd1(Band::High, r), 1e-6) << r;
    EXPECT_NEAR(eval_cutoff_derivative(Band::High, 2, r), fd2(Band::High, r), 1e-4) << r;
  }
}

TEST(Cutoffs, SmoothnessProxy) {
  // Difference quotients stay bounded as the step shrinks: no jumps.
  for (Band b : {Band::Low, Band::Mid, Band::High}) {
    double prev1 = 0.0, prev2 = 0.0;
    for (double h : {4e-3, 1e-3, 2.5e-4}) {
      double m1 = 0.0, m2 = 0.0;
      for (int i = 1; i < 4000; ++i) {
        const double r = 4.0 * i / 4000.0;
        if (r - h < 0) continue;
        const double c = eval_cutoff(b, r), p = eval_cutoff(b, r + h), m = eval_cutoff(b, r - h);
        m1 = std::max(m1, std::abs(p - m) / (2 * h));
        m2 = std::max(m2, std::abs(p - 2 * c + m) / (h * h));
      }
      if (prev1 > 0) {
        EXPECT_LT(m1, 1.5 * prev1);
        EXPECT_LT(m2, 1.5 * prev2);
      }
      prev1 = m1;
      prev2 = m2;
    }
  }
}
