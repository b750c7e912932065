#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pfsmooth/model.hpp"
#include "pfsmooth/neighborhood.hpp"
#include "pfsmooth/particle_filter.hpp"

namespace pfsmooth {

enum class SmootherKind { Filter, FixedLag, FFBSm, SFFBSm, NSFFBSm };

std::string_view to_string(SmootherKind kind);
/// Accepts "filter", "fixed-lag", "ffbsm", "s-ffbsm", "ns-ffbsm".
SmootherKind parse_smoother_kind(std::string_view text);

struct SmootherDiagnostics {
  std::size_t dropped_denominators = 0;  // D_j == 0: j contributed nothing
  std::size_t empty_neighborhoods = 0;   // nearest-particle fallback used
};

/// Per-time-step weighted particle approximations of p(x_n | Y_N).
struct SmoothedMarginals {
  SmootherKind method = SmootherKind::Filter;
  std::size_t lag = 0;
  std::size_t subsample_size = 0;
  double epsilon = 0.0;
  std::vector<std::vector<double>> particles;  // [n-1][i]
  std::vector<std::vector<double>> weights;    // [n-1][i], normalized per step
  SmootherDiagnostics diagnostics;

  std::size_t length() const noexcept { return particles.size(); }
};

/// The filter marginals p(x_n | Y_n) in SmoothedMarginals form.
SmoothedMarginals filter_marginals(const FilterHistory& history);

/// Emission callback of the fixed-lag pass: marginal of time n (1-based)
/// under lag `lag`.
using LagVisitor = std::function<void(std::size_t n, std::size_t lag,
                                      std::span<const double> particles,
                                      std::span<const double> weights)>;

/// Forward filter that carries stored path segments and resamples whole rows.
/// For every lag in `lags` the marginal of time n is emitted once time n+lag
/// has been processed; the last `lag` marginals are read from the final
/// buffer. Random streams match run_filter with the same seed, so each lag's
/// output equals that of a separate fixed_lag_smooth run.
void fixed_lag_pass(const TrendModel& model, const TimeSeries& series, std::size_t m,
                    std::span<const std::size_t> lags, double alpha, std::uint64_t seed,
                    const LagVisitor& visit);

SmoothedMarginals fixed_lag_smooth(const TrendModel& model, const TimeSeries& series,
                                   std::size_t m, std::size_t lag, double alpha,
                                   std::uint64_t seed);

/// Exact marginal forward-filter backward-smoother, O(m^2) per step.
SmoothedMarginals ffbsm(const FilterHistory& history, const TrendModel& model);

enum class SubsampleStrategy { EquallySpaced, StratifiedRandom, WeightStratified };

struct SubsampleOptions {
  std::size_t subsample_size = 0;
  SubsampleStrategy strategy = SubsampleStrategy::EquallySpaced;
  std::uint64_t seed = 0;
  /// EquallySpaced only: use this j0 at every step instead of a random one.
  std::optional<std::size_t> fixed_offset;
};

/// FFBSm with both sums restricted to a per-step index subset; every
/// selected term is divided by its inclusion probability. O(m * m_s).
/// EquallySpaced and StratifiedRandom require m % subsample_size == 0.
SmoothedMarginals s_ffbsm(const FilterHistory& history, const TrendModel& model,
                          const SubsampleOptions& options);

struct NeighborhoodOptions {
  std::size_t subsample_size = 0;
  /// Exceedance level of the neighborhood radius; 0 selects 1/m.
  double epsilon = 0.0;
  /// Overrides the radius derived from epsilon.
  std::optional<double> radius;
  std::uint64_t seed = 0;
};

/// FFBSm restricted to local neighborhoods |x_{n+1}^(j) - x_n^(k)| <= radius,
/// with uniform subsampling (without replacement) inside each neighborhood and
/// Horvitz-Thompson weighting. O(m * subsample_size) plus the per-step sort.
SmoothedMarginals ns_ffbsm(const FilterHistory& history, const TrendModel& model,
                           const NeighborhoodOptions& options);

/// Simple random sampling without replacement of positions inside a range.
/// Small samples use rejection against a mark array, larger ones a partial
/// Fisher-Yates over a reused identity permutation; each draw is O(size).
class SubsetSampler {
 public:
  explicit SubsetSampler(std::size_t capacity);

  /// Writes min(size, range.size()) distinct positions in [range.begin, range.end).
  std::span<const std::size_t> draw(IndexRange range, std::size_t size, Rng& rng);

 private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> swaps_;
  std::vector<std::size_t> out_;
  std::vector<unsigned char> taken_;
};

/// Full denominator restricted to the neighborhood of x_next:
/// sum over k in N(x_next) of w_k p(x_next | x_k).
double truncated_denominator(const ParticleSystem& previous, const TrendModel& model,
                             double x_next, double radius);

/// Horvitz-Thompson estimate of truncated_denominator from a uniform subset
/// of `subsample_size` neighbors, inclusion probability size/|N|.
double estimate_denominator(const ParticleSystem& previous, const TrendModel& model,
                            double x_next, double radius, std::size_t subsample_size, Rng& rng);

struct MarginalMoments {
  double mean = 0.0;
  double std = 0.0;
};

std::vector<MarginalMoments> smoothing_moments(const SmoothedMarginals& marginals);

}  // namespace pfsmooth
