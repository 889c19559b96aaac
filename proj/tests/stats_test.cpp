#include <gtest/gtest.h>

#include <vector>

#include "seglab/stats.hpp"

using namespace seglab;

TEST(Stats, MeanAndVariance) {
  std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean_of(v), 2.5);
  EXPECT_DOUBLE_EQ(variance_of(v), (2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  EXPECT_THROW(mean_of({}), Error);
  EXPECT_THROW(variance_of({1.0}), Error);
}

// Reference t/df/p triples computed with an independent statistics package.
struct Fixture {
  std::vector<double> a, b;
  double t, df, p;
};

TEST(Stats, WelchMatchesReferenceFixtures) {
  const std::vector<Fixture> fixtures = {
      {{0.71, 0.68, 0.74, 0.70, 0.69},
       {0.61, 0.63, 0.60, 0.65, 0.62},
       6.111919138499422, 7.7549066539013909, 0.00032372952523183635},
      {{0.802, 0.795, 0.810, 0.788, 0.799, 0.805},
       {0.801, 0.797, 0.806, 0.793, 0.800},
       0.11332661291428144, 8.4584900174651221, 0.91241549067347072},
      {{0.5, 0.9, 0.4, 0.85, 0.6},
       {0.55, 0.88, 0.42, 0.8, 0.65},
       -0.078110698813072435, 7.8021494008586885, 0.93970598217230694},
  };
  for (const Fixture& f : fixtures) {
    TTestResult r = welch_ttest(f.a, f.b);
    EXPECT_NEAR(r.t, f.t, 1e-6);
    EXPECT_NEAR(r.df, f.df, 1e-6);
    EXPECT_NEAR(r.p, f.p, 1e-6);
    EXPECT_EQ(r.significant, f.p < 0.05);
  }
}

TEST(Stats, SwappingSamplesNegatesT) {
  std::vector<double> a{0.7, 0.72, 0.69, 0.71};
  std::vector<double> b{0.6, 0.59, 0.62, 0.61};
  TTestResult ab = welch_ttest(a, b);
  TTestResult ba = welch_ttest(b, a);
  EXPECT_NEAR(ab.t, -ba.t, 1e-12);
  EXPECT_NEAR(ab.p, ba.p, 1e-12);
}

TEST(Stats, ZeroVarianceConvention) {
  std::vector<double> a{0.5, 0.5, 0.5};
  std::vector<double> b{0.5, 0.5, 0.5};
  TTestResult r = welch_ttest(a, b);
  EXPECT_DOUBLE_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(Stats, RejectsTinySamples) {
  try {
    welch_ttest({1.0}, {1.0, 2.0});
    FAIL() << "expected sample error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Sample);
  }
}

TEST(Stats, IncompleteBetaSpotValues) {
  // I_x(a,b) against closed forms: I_x(1,1) = x, I_x(2,1) = x^2
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-12);
  EXPECT_NEAR(incomplete_beta(2, 1, 0.7), 0.49, 1e-12);
  EXPECT_NEAR(incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-12);  // symmetry point
}
