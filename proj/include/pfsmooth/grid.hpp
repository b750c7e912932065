#pragma once

#include <cstddef>
#include <vector>

namespace pfsmooth {

/// Uniform evaluation grid. Point i (0-based) sits at origin + i*step and is
/// the center of cell [point - step/2, point + step/2).
struct Grid {
  double origin = -8.0;
  double step = 16.0 / 6400.0;
  std::size_t count = 6400;

  double point(std::size_t i) const noexcept { return origin + static_cast<double>(i) * step; }
  double lower_edge() const noexcept { return origin - 0.5 * step; }
  double upper_edge() const noexcept { return point(count - 1) + 0.5 * step; }
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Piecewise-constant density on the cells of a grid.
struct GridDensity {
  Grid grid;
  std::vector<double> values;

  GridDensity() = default;
  explicit GridDensity(const Grid& g) : grid(g), values(g.count, 0.0) {}

  double integral() const noexcept;
  double mean() const noexcept;
  double variance() const noexcept;
  /// Scales values so that the integral is 1. Returns the pre-scaling integral.
  double normalize();
};

/// N(mean, var) evaluated at cell centers and renormalized. var == 0 puts all
/// mass in the cell containing `mean`.
GridDensity render_normal(double mean, double var, const Grid& grid);

}  // namespace pfsmooth
