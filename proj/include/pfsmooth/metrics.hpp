#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pfsmooth/grid.hpp"
#include "pfsmooth/kalman.hpp"
#include "pfsmooth/smoothers.hpp"

namespace pfsmooth {

struct GridHistogram {
  GridDensity density;
  std::size_t out_of_range = 0;  // particles clamped into a boundary cell
};

/// Weighted histogram: each weight lands in the cell containing its particle,
/// divided by the cell width. Out-of-grid particles go to the nearest
/// boundary cell. The result integrates to sum(weights).
GridHistogram particles_to_grid(std::span<const double> particles, std::span<const double> weights,
                                const Grid& grid);

/// sum_i (a_i - b_i)^2 * step for one time step. Throws on grid mismatch.
double dist_step(const GridDensity& reference, const GridDensity& estimate);

struct DistResult {
  double value = 0.0;
  std::vector<double> per_n;
};

/// sum_n sum_i (D(x_i, n) - D^(x_i, n))^2 * step.
DistResult dist(std::span<const GridDensity> reference, std::span<const GridDensity> estimate);

/// Histogram densities of every step of a smoother output.
std::vector<GridDensity> marginals_to_grid(const SmoothedMarginals& marginals, const Grid& grid);

/// Gaussian moments rendered at cell centers and renormalized.
std::vector<GridDensity> moments_to_grid(std::span<const GaussianMoments> moments, const Grid& grid);

}  // namespace pfsmooth
