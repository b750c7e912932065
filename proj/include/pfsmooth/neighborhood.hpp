#pragma once

#include <cstddef>
#include <cstdint>

#include "pfsmooth/model.hpp"
#include "pfsmooth/particle_filter.hpp"

namespace pfsmooth {

// Tail thresholds k_m with two-sided exceedance P(|X| > k_m) = 1/m for the
// standardized noise families.

/// Gaussian: Phi^{-1}(1 - 1/(2m)).
double k_gaussian(double m);
/// Closed-form approximation sqrt(2 ln 2m - ln ln 2m - ln 2pi)
/// (Voutier, 2010).
double k_gaussian_voutier(double m);
/// Standard Cauchy: tan(pi/2 * (1 - 1/m)).
double k_cauchy(double m);

inline constexpr std::size_t kDefaultQuantileSamples = 10'000'000;
inline constexpr std::uint64_t kDefaultQuantileSeed = 20140101;

/// Monte Carlo (1 - 1/m) quantile of |X| for a standard Cauchy truncated to
/// |X| <= truncation (truncation in scale units). Throws std::invalid_argument
/// if m > mc_samples / 10.
double k_truncated_cauchy(double m, double truncation, std::size_t mc_samples = kDefaultQuantileSamples,
                          std::uint64_t seed = kDefaultQuantileSeed);

struct TailThreshold {
  NoiseKind family;
  double m;
  double k;       // standardized threshold
  double radius;  // k * scale, in state units
};

/// Threshold for exceedance probability epsilon (= 1/m) of the given noise.
/// Truncated-Cauchy thresholds are Monte Carlo estimates, memoized per
/// (epsilon, truncation/scale).
TailThreshold tail_threshold(const NoiseFamily& noise, double epsilon);

/// Contiguous range of positions into ParticleSystem::sorted_index.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
};

/// Particles with |x - center| <= radius, as a range of sorted positions.
IndexRange neighborhood_range(const ParticleSystem& system, double center, double radius);

/// Same search over an explicitly sorted value array.
IndexRange neighborhood_range(std::span<const double> sorted_values, double center, double radius);

}  // namespace pfsmooth
