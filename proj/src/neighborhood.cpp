#include "pfsmooth/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace pfsmooth {

namespace {

void require_m(double m) {
  if (!(m >= 2.0) || !std::isfinite(m)) throw std::invalid_argument("tail threshold needs m >= 2");
}

}  // namespace

double k_gaussian(double m) {
  require_m(m);
  const boost::math::normal standard;
  // Upper quantile via the complement keeps full precision for large m.
  return boost::math::quantile(boost::math::complement(standard, 0.5 / m));
}

double k_gaussian_voutier(double m) {
  require_m(m);
  const double l = std::log(2.0 * m);
  return std::sqrt(2.0 * l - std::log(l) - std::log(2.0 * std::numbers::pi));
}

double k_cauchy(double m) {
  require_m(m);
  // tan(pi/2 (1 - 1/m)) == 1 / tan(pi / (2m)), without the loss near pi/2.
  return 1.0 / std::tan(std::numbers::pi / (2.0 * m));
}

double k_truncated_cauchy(double m, double truncation, std::size_t mc_samples,
                          std::uint64_t seed) {
  require_m(m);
  if (!(truncation > 0.0)) throw std::invalid_argument("truncation must be positive");
  if (m > static_cast<double>(mc_samples) / 10.0) {
    throw std::invalid_argument("k_truncated_cauchy: m exceeds mc_samples/10, quantile unresolvable");
  }
  const NoiseFamily standard = NoiseFamily::truncated_cauchy(1.0, truncation);
  Rng rng(seed);
  std::vector<double> magnitudes(mc_samples);
  for (double& v : magnitudes) v = std::abs(standard.sample(rng));
  const double level = 1.0 - 1.0 / m;
  auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(mc_samples)));
  rank = std::clamp<std::size_t>(rank, 1, mc_samples) - 1;
  std::ranges::nth_element(magnitudes, magnitudes.begin() + static_cast<std::ptrdiff_t>(rank));
  return magnitudes[rank];
}

TailThreshold tail_threshold(const NoiseFamily& noise, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  const double m = 1.0 / epsilon;
  double k = 0.0;
  switch (noise.kind()) {
    case NoiseKind::Gaussian:
      k = k_gaussian(m);
      break;
    case NoiseKind::Cauchy:
      k = k_cauchy(m);
      break;
    case NoiseKind::TruncatedCauchy: {
      static std::mutex mutex;
      static std::map<std::pair<double, double>, double> cache;
      const double truncation = *noise.truncation() / noise.scale();
      const std::pair key{m, truncation};
      std::scoped_lock lock(mutex);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const std::size_t samples =
            std::max(kDefaultQuantileSamples, static_cast<std::size_t>(std::ceil(10.0 * m)));
        it = cache.emplace(key, k_truncated_cauchy(m, truncation, samples)).first;
      }
      k = it->second;
      break;
    }
  }
  return {noise.kind(), m, k, k * noise.scale()};
}

IndexRange neighborhood_range(std::span<const double> sorted_values, double center, double radius) {
  const auto lo = std::ranges::lower_bound(sorted_values, center - radius);
  const auto hi = std::ranges::upper_bound(sorted_values, center + radius);
  const auto begin = static_cast<std::size_t>(lo - sorted_values.begin());
  const auto end = static_cast<std::size_t>(hi - sorted_values.begin());
  return {begin, std::max(begin, end)};
}

IndexRange neighborhood_range(const ParticleSystem& system, double center, double radius) {
  const auto value = [&system](std::size_t i) { return system.particles[i]; };
  const auto lo = std::ranges::lower_bound(system.sorted_index, center - radius, {}, value);
  const auto hi = std::ranges::upper_bound(system.sorted_index, center + radius, {}, value);
  const auto begin = static_cast<std::size_t>(lo - system.sorted_index.begin());
  const auto end = static_cast<std::size_t>(hi - system.sorted_index.begin());
  return {begin, std::max(begin, end)};
}

}  // namespace pfsmooth
