#include "pfsmooth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfsmooth {

GridHistogram particles_to_grid(std::span<const double> particles, std::span<const double> weights,
                                const Grid& grid) {
  grid.validate();
  if (particles.size() != weights.size()) {
    throw std::invalid_argument("particles_to_grid: particle/weight size mismatch");
  }
  GridHistogram out{GridDensity(grid), 0};
  const double lower = grid.lower_edge();
  const double inv_step = 1.0 / grid.step;
  const auto last = static_cast<double>(grid.count - 1);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const double pos = std::floor((particles[i] - lower) * inv_step);
    double cell = pos;
    if (!(pos >= 0.0 && pos <= last)) {
      ++out.out_of_range;
      cell = pos > last ? last : 0.0;
    }
    out.density.values[static_cast<std::size_t>(cell)] += weights[i] * inv_step;
  }
  return out;
}

double dist_step(const GridDensity& reference, const GridDensity& estimate) {
  if (reference.grid != estimate.grid || reference.values.size() != estimate.values.size()) {
    throw std::invalid_argument("dist: grid mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i) {
    const double d = reference.values[i] - estimate.values[i];
    sum += d * d;
  }
  return sum * reference.grid.step;
}

DistResult dist(std::span<const GridDensity> reference, std::span<const GridDensity> estimate) {
  if (reference.size() != estimate.size()) throw std::invalid_argument("dist: length mismatch");
  DistResult out;
  out.per_n.reserve(reference.size());
  for (std::size_t n = 0; n < reference.size(); ++n) {
    out.per_n.push_back(dist_step(reference[n], estimate[n]));
    out.value += out.per_n.back();
  }
  return out;
}

std::vector<GridDensity> marginals_to_grid(const SmoothedMarginals& marginals, const Grid& grid) {
  std::vector<GridDensity> out;
  out.reserve(marginals.length());
  for (std::size_t n = 0; n < marginals.length(); ++n) {
    out.push_back(particles_to_grid(marginals.particles[n], marginals.weights[n], grid).density);
  }
  return out;
}

std::vector<GridDensity> moments_to_grid(std::span<const GaussianMoments> moments, const Grid& grid) {
  std::vector<GridDensity> out;
  out.reserve(moments.size());
  for (const auto& mo : moments) out.push_back(render_normal(mo.mean, mo.var, grid));
  return out;
}

}  // namespace pfsmooth
