#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pfsmooth/kalman.hpp"
#include "pfsmooth/particle_filter.hpp"

using namespace pfsmooth;

namespace {

ParticleSystem cloud(std::vector<double> x, std::vector<double> w) {
  ParticleSystem s;
  s.particles = std::move(x);
  s.weights = std::move(w);
  s.sort_index();
  return s;
}

std::vector<std::size_t> copies(const std::vector<std::size_t>& ancestors, std::size_t m) {
  std::vector<std::size_t> c(m, 0);
  for (auto a : ancestors) ++c[a];
  return c;
}

}  // namespace

TEST(Ess, Examples) {
  EXPECT_NEAR(ess(std::vector<double>(100, 0.01)), 100.0, 1e-9);
  std::vector<double> one(50, 0.0);
  one[7] = 1.0;
  EXPECT_EQ(ess(one), 1.0);
  EXPECT_EQ(ess(std::vector<double>{0.5, 0.5, 0, 0}), 2.0);
  EXPECT_THROW(ess(std::vector<double>{0, 0, 0}), std::domain_error);
}

TEST(Resample, UniformWeightsKeepEveryParticleOnce) {
  const std::size_t m = 37;
  std::vector<double> w(m, 1.0 / m);
  std::vector<std::size_t> anc(m);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    systematic_ancestors(w, rng.uniform() / m, anc);
    for (auto c : copies(anc, m)) ASSERT_EQ(c, 1u);
  }
}

TEST(Resample, DegenerateWeightCopiesSingleParticle) {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const ParticleSystem s = cloud(x, {1.0, 0.0, 0.0, 0.0});
  Rng rng(9);
  const ParticleSystem r = resample(s, rng);
  for (double v : r.particles) EXPECT_EQ(v, 1.0);
  for (double w : r.weights) EXPECT_EQ(w, 0.25);
  EXPECT_TRUE(r.resampled);
}

TEST(Resample, CopyCountsAreUnbiased) {
  const std::size_t m = 10;
  std::vector<double> w(m, 0.3 / 9);
  w[0] = 0.7;
  std::vector<std::size_t> anc(m);
  Rng rng(17);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    systematic_ancestors(w, rng.uniform() / m, anc);
    const auto c = copies(anc, m);
    total += static_cast<double>(c[0]);
    for (std::size_t i = 0; i < m; ++i) {
      ASSERT_LT(std::abs(static_cast<double>(c[i]) - m * w[i]), 1.0);
    }
  }
  EXPECT_NEAR(total / trials, 7.0, 0.05);
}

TEST(Resample, NonUniformCountsBoundedAndMeanCorrect) {
  const std::size_t m = 200;
  std::vector<double> w(m);
  Rng gen(1);
  for (double& v : w) v = gen.uniform() + 0.01;
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
  std::vector<double> mean(m, 0.0);
  std::vector<std::size_t> anc(m);
  Rng rng(2);
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    systematic_ancestors(w, rng.uniform() / m, anc);
    ASSERT_TRUE(std::ranges::is_sorted(anc));
    const auto c = copies(anc, m);
    for (std::size_t i = 0; i < m; ++i) {
      ASSERT_LT(std::abs(static_cast<double>(c[i]) - m * w[i]), 1.0);
      mean[i] += static_cast<double>(c[i]) / trials;
    }
  }
  for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(mean[i], m * w[i], 0.05);
}

TEST(ParticleSystem, SortIndexOrdersParticles) {
  const ParticleSystem s = cloud({3.0, -1.0, 2.0, 2.0, 0.5}, {0.2, 0.2, 0.2, 0.2, 0.2});
  for (std::size_t k = 1; k < s.size(); ++k) {
    EXPECT_LE(s.particles[s.sorted_index[k - 1]], s.particles[s.sorted_index[k]]);
  }
}

TEST(RunFilter, TracksKalmanFilter) {
  const TrendModel model = default_model(NoiseKind::Gaussian);
  const TimeSeries y = generate_test_series(model, default_schedule(), 500, 1).series;
  const auto spec = linear_gaussian_spec(model);
  const KalmanRun kf = kalman_filter(spec, y);
  const FilterHistory h = run_filter(model, y, 10000, 0.5, 12);
  double sq = 0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const auto& s = h.systems[n];
    double mean = 0;
    for (std::size_t i = 0; i < s.size(); ++i) mean += s.weights[i] * s.particles[i];
    sq += (mean - kf.filtered[n].mean) * (mean - kf.filtered[n].mean);
  }
  EXPECT_LT(std::sqrt(sq / y.size()), 0.05);
}

TEST(RunFilter, WeightsNormalizedAndEssConsistent) {
  const TrendModel model = default_model(NoiseKind::TruncatedCauchy);
  const TimeSeries y = generate_test_series(model, default_schedule(), 200, 5).series;
  const FilterHistory h = run_filter(model, y, 500, 0.5, 3);
  ASSERT_EQ(h.length(), 200u);
  for (const auto& s : h.systems) {
    EXPECT_NEAR(std::accumulate(s.weights.begin(), s.weights.end(), 0.0), 1.0, 1e-10);
    EXPECT_NEAR(s.ess, ess(s.weights), 1e-8 * s.ess);
    if (s.resampled) {
      EXPECT_LT(s.ess_before_resampling, 0.5 * 500);
      EXPECT_EQ(s.ess, 500.0);
    } else {
      EXPECT_GE(s.ess_before_resampling, 0.5 * 500);
    }
  }
}

TEST(RunFilter, NoResamplingIsImportanceSampling) {
  const TrendModel model = default_model(NoiseKind::Gaussian);
  const TimeSeries y = generate_test_series(model, default_schedule(), 100, 8).series;
  // Average over seeds: ESS decreases in expectation.
  std::vector<double> mean_ess(y.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const FilterHistory h = run_filter(model, y, 300, 0.0, seed);
    for (std::size_t n = 0; n < y.size(); ++n) {
      EXPECT_FALSE(h.systems[n].resampled);
      mean_ess[n] += h.systems[n].ess / 8;
    }
    // Without resampling particles evolve independently from the initial draw.
    EXPECT_EQ(h.systems[0].particles.size(), 300u);
  }
  EXPECT_LT(mean_ess.back(), mean_ess.front());
  for (std::size_t n = 10; n < y.size(); n += 10) EXPECT_LE(mean_ess[n], mean_ess[n - 10] * 1.05);
}

TEST(RunFilter, SameSeedIsBitIdentical) {
  const TrendModel model = default_model(NoiseKind::Cauchy);
  const TimeSeries y = generate_test_series(model, default_schedule(), 150, 2).series;
  const FilterHistory a = run_filter(model, y, 400, 0.5, 77);
  const FilterHistory b = run_filter(model, y, 400, 0.5, 77);
  const FilterHistory c = run_filter(model, y, 400, 0.5, 78);
  for (std::size_t n = 0; n < y.size(); ++n) {
    ASSERT_EQ(a.systems[n].particles, b.systems[n].particles);
    ASSERT_EQ(a.systems[n].weights, b.systems[n].weights);
    ASSERT_EQ(a.systems[n].sorted_index, b.systems[n].sorted_index);
  }
  EXPECT_NE(a.systems.back().particles, c.systems.back().particles);
}

TEST(RunFilter, RejectsBadArguments) {
  const TrendModel model = default_model(NoiseKind::Gaussian);
  const TimeSeries y{{0.1}};
  EXPECT_THROW(run_filter(model, y, 1, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(run_filter(model, y, 10, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(run_filter(model, TimeSeries{}, 10, 0.5, 1), std::invalid_argument);
}
