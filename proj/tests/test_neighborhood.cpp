#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pfsmooth/neighborhood.hpp"

using namespace pfsmooth;

TEST(KGaussian, TableValues) {
  EXPECT_NEAR(k_gaussian(100), 2.5758, 1e-4);
  EXPECT_NEAR(k_gaussian(1e4), 3.8906, 1e-4);
  EXPECT_NEAR(k_gaussian(2), 0.6745, 1e-4);
}

TEST(KGaussian, VoutierApproximation) {
  EXPECT_NEAR(k_gaussian_voutier(100), 2.6630, 1e-4);
  EXPECT_NEAR(k_gaussian_voutier(1e6), 4.9502, 1e-4);
  for (double m : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    EXPECT_LT(std::abs(k_gaussian_voutier(m) - k_gaussian(m)) / k_gaussian(m), 0.04) << m;
  }
}

TEST(KCauchy, TableValues) {
  EXPECT_NEAR(k_cauchy(100), 63.657, 1e-3);
  EXPECT_NEAR(k_cauchy(1000), 636.62, 1e-2);
  EXPECT_NEAR(k_cauchy(2), 1.0, 1e-12);
}

TEST(KTruncatedCauchy, MatchesClosedFormQuantile) {
  const double t = 10.0 / 0.0059;
  const auto exact = [t](double m) { return std::tan((1 - 1 / m) * std::atan(t)); };
  EXPECT_NEAR(k_truncated_cauchy(100, t, 1'000'000, 3), 61.4, 0.05 * 61.4);
  EXPECT_NEAR(k_truncated_cauchy(2, t, 1'000'000, 3), 1.0, 0.02);
  for (double m : {10.0, 100.0, 1000.0}) {
    EXPECT_NEAR(k_truncated_cauchy(m, t, 1'000'000, 5), exact(m), 0.05 * exact(m)) << m;
  }
  // Near the truncation bound for large m.
  const double big = k_truncated_cauchy(1e5, t, 2'000'000, 7);
  EXPECT_NEAR(big, exact(1e5), 0.05 * exact(1e5));
  EXPECT_LE(big, t);
  EXPECT_THROW(k_truncated_cauchy(1e6, t, 1'000'000, 1), std::invalid_argument);
}

TEST(KTruncatedCauchy, DeterministicForSeed) {
  EXPECT_EQ(k_truncated_cauchy(300, 50.0, 100'000, 9), k_truncated_cauchy(300, 50.0, 100'000, 9));
}

TEST(TailThreshold, RadiusIsScaledThreshold) {
  const auto g = tail_threshold(NoiseFamily::gaussian(kDefaultGaussianScale), 1e-3);
  EXPECT_NEAR(g.k, 3.2905, 1e-4);
  EXPECT_DOUBLE_EQ(g.radius, g.k * kDefaultGaussianScale);
  EXPECT_NEAR(g.radius, 0.3635, 5e-5);
  const auto c = tail_threshold(NoiseFamily::cauchy(0.0059), 1e-2);
  EXPECT_NEAR(c.radius, 63.657 * 0.0059, 1e-5);
  const auto t = tail_threshold(NoiseFamily::truncated_cauchy(0.0059, 10.0), 1e-2);
  EXPECT_NEAR(t.radius, 61.4 * 0.0059, 0.05 * 61.4 * 0.0059);
  EXPECT_LE(tail_threshold(NoiseFamily::truncated_cauchy(0.0059, 10.0), 1e-5).radius, 10.0);
}

TEST(NeighborhoodRange, Limits) {
  const std::vector<double> x{-1.0, -0.5, 0.0, 0.25, 2.0};
  const auto all = neighborhood_range(x, 0.0, 100.0);
  EXPECT_EQ(all.begin, 0u);
  EXPECT_EQ(all.end, x.size());
  EXPECT_TRUE(neighborhood_range(x, 0.1, 0.0).empty());
  // Bounds are inclusive.
  const auto r = neighborhood_range(x, 0.0, 0.5);
  EXPECT_EQ(r.begin, 1u);
  EXPECT_EQ(r.end, 4u);
  const auto exact = neighborhood_range(x, 0.25, 0.0);
  EXPECT_EQ(exact.size(), 1u);
  EXPECT_EQ(exact.begin, 3u);
}

TEST(NeighborhoodRange, MatchesLinearScan) {
  Rng rng(42);
  std::normal_distribution<double> z;
  ParticleSystem s;
  for (int i = 0; i < 500; ++i) s.particles.push_back(z(rng));
  s.weights.assign(500, 1.0 / 500);
  s.sort_index();
  for (int q = 0; q < 1000; ++q) {
    const double center = 3 * z(rng);
    const double radius = std::abs(z(rng));
    const IndexRange r = neighborhood_range(s, center, radius);
    std::size_t expected = 0;
    for (double v : s.particles) expected += std::abs(v - center) <= radius;
    ASSERT_EQ(r.size(), expected);
    for (std::size_t p = r.begin; p < r.end; ++p) {
      ASSERT_LE(std::abs(s.particles[s.sorted_index[p]] - center), radius);
    }
  }
}
