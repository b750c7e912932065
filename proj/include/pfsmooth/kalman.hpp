#pragma once

#include <vector>

#include "pfsmooth/model.hpp"

namespace pfsmooth {

/// Scalar linear-Gaussian state-space model
///   x_n = F x_{n-1} + G v_n,  v_n ~ N(0, Q)
///   y_n = H x_n + w_n,        w_n ~ N(0, R)
struct LinearGaussianSpec {
  double F = 1.0;
  double G = 1.0;
  double H = 1.0;
  double Q = 0.0;
  double R = 1.0;
  double x0_mean = 0.0;
  double x0_var = 0.0;

  void validate() const;
};

/// Stand-in for a diffuse prior variance.
inline constexpr double kDiffuseVariance = 1e6;

/// Linear-Gaussian equivalent of a Gaussian trend model. Throws for
/// non-Gaussian system noise.
LinearGaussianSpec linear_gaussian_spec(const TrendModel& model);

struct GaussianMoments {
  double mean = 0.0;
  double var = 0.0;
};

struct KalmanRun {
  std::vector<GaussianMoments> predicted;
  std::vector<GaussianMoments> filtered;
  std::vector<GaussianMoments> smoothed;
  std::vector<double> gain_log;
  std::vector<double> smoother_gain_log;
};

/// Forward pass; fills `predicted`, `filtered` and `gain_log`.
/// Throws SingularInnovation if H V H' + R == 0 at some step.
KalmanRun kalman_filter(const LinearGaussianSpec& spec, const TimeSeries& series);

/// Fixed-interval backward pass over a completed filter run; fills
/// `smoothed` and `smoother_gain_log`. A zero predicted variance yields a
/// zero smoother gain.
KalmanRun kalman_smoother(KalmanRun run, const LinearGaussianSpec& spec);

}  // namespace pfsmooth
