#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfsmooth/rng.hpp"

namespace pfsmooth {

enum class NoiseKind { Gaussian, Cauchy, TruncatedCauchy };

std::string_view to_string(NoiseKind kind);
/// Accepts "gauss"/"gaussian", "cauchy", "tcauchy"/"truncated-cauchy".
NoiseKind parse_noise_kind(std::string_view text);

/// System-noise distribution of the trend model.
///
/// `scale` is the standard deviation (Gaussian) or the dispersion (Cauchy).
/// For the truncated Cauchy, |v| <= truncation in raw noise units and the
/// density is renormalized over that interval.
class NoiseFamily {
 public:
  static NoiseFamily gaussian(double scale);
  static NoiseFamily cauchy(double scale);
  static NoiseFamily truncated_cauchy(double scale, double truncation);

  NoiseKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  std::optional<double> truncation() const noexcept { return truncation_; }

  double log_density(double v) const noexcept;
  double cdf(double v) const noexcept;
  /// Probability mass on [lo, hi].
  double mass(double lo, double hi) const noexcept { return cdf(hi) - cdf(lo); }
  double sample(Rng& rng) const;

  friend bool operator==(const NoiseFamily&, const NoiseFamily&) = default;

 private:
  NoiseFamily(NoiseKind kind, double scale, std::optional<double> truncation);

  NoiseKind kind_;
  double scale_;
  std::optional<double> truncation_;
  double log_norm_;     // log normalizing constant of the density
  double trunc_mass_;   // untruncated Cauchy mass on [-truncation, truncation]
};

/// x_n = x_{n-1} + v_n,  y_n = x_n + w_n,  w_n ~ N(0, obs_std^2),
/// x_0 ~ N(initial_mean, initial_std^2).
class TrendModel {
 public:
  TrendModel(NoiseFamily system_noise, double obs_std, double initial_mean = 0.0,
             double initial_std = 1.0);

  const NoiseFamily& system_noise() const noexcept { return noise_; }
  double obs_std() const noexcept { return obs_std_; }
  double initial_mean() const noexcept { return initial_mean_; }
  double initial_std() const noexcept { return initial_std_; }

  double transition_logdensity(double x_prev, double x_next) const noexcept {
    return noise_.log_density(x_next - x_prev);
  }
  double sample_transition(double x_prev, Rng& rng) const { return x_prev + noise_.sample(rng); }
  double observation_logdensity(double x, double y) const noexcept;
  double sample_initial(Rng& rng) const;

  /// True for obs_std == 0 (permitted for data generation only).
  bool noiseless_observations() const noexcept { return obs_std_ == 0.0; }

  friend bool operator==(const TrendModel&, const TrendModel&) = default;

 private:
  NoiseFamily noise_;
  double obs_std_;
  double initial_mean_;
  double initial_std_;
  double obs_log_norm_;
};

// Defaults of the trend-estimation study. The observation variance of the
// classic data set is not published; 1.0 is used.
inline constexpr double kDefaultObsStd = 1.0;
inline constexpr double kDefaultGaussianScale = 0.11045361017187261;  // sqrt(0.0122), printed as 0.1105
inline constexpr double kDefaultCauchyScale = 0.0059;
inline constexpr double kDefaultTruncation = 10.0;

TrendModel default_model(NoiseKind kind);

struct TimeSeries {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
};

/// One observation per line; blank lines and lines starting with '#' are skipped.
TimeSeries load_time_series(const std::filesystem::path& path);
TimeSeries parse_time_series(std::string_view text);
void save_time_series(const TimeSeries& series, const std::filesystem::path& path,
                      std::string_view header_comment = {});

/// Piecewise-constant trend level over 1-based inclusive time ranges.
struct LevelSegment {
  std::size_t first;
  std::size_t last;
  double level;
};

using LevelSchedule = std::vector<LevelSegment>;

/// 0 on 1..100, 1 on 101..250, -1 on 251..400, 0 on 401..500.
LevelSchedule default_schedule();

struct GeneratedSeries {
  TimeSeries series;
  std::vector<double> trend;
};

/// y_n = trend(n) + w_n. Throws std::invalid_argument if the schedule does
/// not cover 1..length without gaps or overlaps.
GeneratedSeries generate_test_series(const TrendModel& model, const LevelSchedule& schedule,
                                     std::size_t length, std::uint64_t seed);

}  // namespace pfsmooth
