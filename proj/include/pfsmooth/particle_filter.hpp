#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pfsmooth/model.hpp"
#include "pfsmooth/rng.hpp"

namespace pfsmooth {

/// Weighted particle cloud at one time step.
struct ParticleSystem {
  std::vector<double> particles;
  std::vector<double> weights;          // normalized
  std::vector<std::size_t> sorted_index;  // particles[sorted_index[k]] nondecreasing in k
  double ess = 0.0;                      // of `weights` as stored
  double ess_before_resampling = 0.0;    // of the weights that triggered the decision
  bool resampled = false;

  std::size_t size() const noexcept { return particles.size(); }
  /// Recomputes sorted_index from particles.
  void sort_index();
};

/// 1 / sum(w^2) of normalized weights. Throws std::domain_error when the
/// weights sum to zero.
double ess(std::span<const double> weights);

/// Systematic resampling: ancestor indices for a single offset u in [0, 1/m).
/// Writes m indices into `ancestors`; copy counts differ from m*w_i by < 1.
void systematic_ancestors(std::span<const double> weights, double u,
                          std::span<std::size_t> ancestors);

/// Equally weighted cloud drawn by systematic resampling.
ParticleSystem resample(const ParticleSystem& system, Rng& rng);

struct FilterHistory {
  std::vector<ParticleSystem> systems;  // systems[n-1] approximates p(x_n | Y_n)
  std::size_t m = 0;
  double alpha = 0.5;
  std::uint64_t seed = 0;

  std::size_t length() const noexcept { return systems.size(); }
};

inline constexpr double kDefaultAlpha = 0.5;

/// Bootstrap particle filter with ESS-triggered systematic resampling.
/// The step-n random stream is keyed by (seed, n), so runs are reproducible
/// bit for bit. alpha = 0 disables resampling.
/// Throws NumericalError if every weight underflows at some step.
FilterHistory run_filter(const TrendModel& model, const TimeSeries& series, std::size_t m,
                         double alpha, std::uint64_t seed);

/// Incremental form of run_filter, used by run_filter itself and by the
/// fixed-lag smoother so both consume identical random streams.
class ForwardFilter {
 public:
  ForwardFilter(const TrendModel& model, std::size_t m, double alpha, std::uint64_t seed);

  /// Propagates and reweights with observation `y` as time step `n` (1-based).
  /// Returns true if the step resampled; ancestors() is then valid.
  bool step(std::size_t n, double y);

  std::span<const double> particles() const noexcept { return particles_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::size_t> ancestors() const noexcept { return ancestors_; }
  double ess() const noexcept { return ess_; }
  double ess_before_resampling() const noexcept { return ess_before_; }

  ParticleSystem snapshot(bool resampled) const;

 private:
  const TrendModel* model_;
  std::size_t m_;
  double alpha_;
  std::uint64_t seed_;
  std::vector<double> particles_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> scratch_;
  std::vector<std::size_t> ancestors_;
  double ess_ = 0.0;
  double ess_before_ = 0.0;
};

}  // namespace pfsmooth
