#include "pfsmooth/kalman.hpp"

#include <cmath>
#include <stdexcept>

#include "pfsmooth/error.hpp"

namespace pfsmooth {

void LinearGaussianSpec::validate() const {
  if (!(Q >= 0.0) || !(R >= 0.0) || !(x0_var >= 0.0)) {
    throw std::invalid_argument("Q, R and x0_var must be nonnegative");
  }
  if (!std::isfinite(F) || !std::isfinite(G) || !std::isfinite(H) || !std::isfinite(x0_mean)) {
    throw std::invalid_argument("linear-Gaussian coefficients must be finite");
  }
}

LinearGaussianSpec linear_gaussian_spec(const TrendModel& model) {
  if (model.system_noise().kind() != NoiseKind::Gaussian) {
    throw std::invalid_argument("Kalman reference requires Gaussian system noise");
  }
  const double tau = model.system_noise().scale();
  const double sigma = model.obs_std();
  return {.F = 1.0,
          .G = 1.0,
          .H = 1.0,
          .Q = tau * tau,
          .R = sigma * sigma,
          .x0_mean = model.initial_mean(),
          .x0_var = model.initial_std() * model.initial_std()};
}

KalmanRun kalman_filter(const LinearGaussianSpec& spec, const TimeSeries& series) {
  spec.validate();
  if (series.empty()) throw std::invalid_argument("kalman_filter: empty series");
  const std::size_t length = series.size();
  KalmanRun run;
  run.predicted.reserve(length);
  run.filtered.reserve(length);
  run.gain_log.reserve(length);

  double mean = spec.x0_mean;
  double var = spec.x0_var;
  for (std::size_t n = 0; n < length; ++n) {
    const double pred_mean = spec.F * mean;
    const double pred_var = spec.F * var * spec.F + spec.G * spec.Q * spec.G;
    const double innovation_var = spec.H * pred_var * spec.H + spec.R;
    if (innovation_var == 0.0) throw SingularInnovation(n + 1);
    const double gain = pred_var * spec.H / innovation_var;
    mean = pred_mean + gain * (series.values[n] - spec.H * pred_mean);
    var = (1.0 - gain * spec.H) * pred_var;
    if (var < 0.0) var = 0.0;
    run.predicted.push_back({pred_mean, pred_var});
    run.filtered.push_back({mean, var});
    run.gain_log.push_back(gain);
  }
  return run;
}

KalmanRun kalman_smoother(KalmanRun run, const LinearGaussianSpec& spec) {
  const std::size_t length = run.filtered.size();
  if (length == 0 || run.predicted.size() != length) {
    throw std::invalid_argument("kalman_smoother: filter pass not completed");
  }
  run.smoothed.assign(length, {});
  run.smoother_gain_log.assign(length, 0.0);
  run.smoothed[length - 1] = run.filtered[length - 1];
  for (std::size_t k = length - 1; k-- > 0;) {
    const GaussianMoments& filt = run.filtered[k];
    const GaussianMoments& next_pred = run.predicted[k + 1];
    const GaussianMoments& next_smooth = run.smoothed[k + 1];
    const double gain = next_pred.var > 0.0 ? filt.var * spec.F / next_pred.var : 0.0;
    GaussianMoments& out = run.smoothed[k];
    out.mean = filt.mean + gain * (next_smooth.mean - next_pred.mean);
    out.var = filt.var + gain * (next_smooth.var - next_pred.var) * gain;
    if (out.var < 0.0) out.var = 0.0;
    run.smoother_gain_log[k] = gain;
  }
  return run;
}

}  // namespace pfsmooth
