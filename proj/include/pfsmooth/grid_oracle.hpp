#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "pfsmooth/grid.hpp"
#include "pfsmooth/model.hpp"

namespace pfsmooth {

/// Cell-to-cell transition masses of a translation-invariant kernel:
/// mass(d) = P(v in [d*step - step/2, d*step + step/2]) for d in [-reach, reach].
/// Entries outside the nonzero support are trimmed.
class TransitionStencil {
 public:
  TransitionStencil(const NoiseFamily& noise, const Grid& grid);

  std::size_t reach() const noexcept { return reach_; }
  /// mass for cell offset d, |d| <= reach.
  double mass(std::ptrdiff_t d) const noexcept {
    return masses_[static_cast<std::size_t>(d + static_cast<std::ptrdiff_t>(reach_))];
  }
  const std::vector<double>& masses() const noexcept { return masses_; }

 private:
  std::size_t reach_ = 0;
  std::vector<double> masses_;  // index d + reach
};

struct GridRun {
  std::vector<GridDensity> predicted;
  std::vector<GridDensity> filtered;
  std::vector<GridDensity> smoothed;
};

/// Step-function non-Gaussian filter: predicted density by discrete
/// convolution of the previous filtered density with the transition kernel,
/// filtered density by multiplying with the observation likelihood.
/// Mass carried outside the grid is dropped and the densities renormalized.
/// Throws NumericalError when all grid mass vanishes. `threads` only affects
/// speed; results are identical for any value.
GridRun grid_filter(const TrendModel& model, const TimeSeries& series, const Grid& grid,
                    unsigned threads = 1);

/// Backward smoothing pass over a completed grid filter run.
GridRun grid_smoother(GridRun run, const TrendModel& model, unsigned threads = 1);

/// Cells whose predicted density is below this fraction of the step's maximum
/// are skipped in the smoothing ratio.
inline constexpr double kSmootherRatioFloor = 1e-15;

/// Binary persistence of a density sequence (all densities share one grid).
void save_densities(const std::vector<GridDensity>& densities, const std::filesystem::path& path);
std::vector<GridDensity> load_densities(const std::filesystem::path& path);

}  // namespace pfsmooth
