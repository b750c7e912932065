#include "pfsmooth/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pfsmooth/error.hpp"

namespace pfsmooth {

void ParticleSystem::sort_index() {
  sorted_index.resize(particles.size());
  std::iota(sorted_index.begin(), sorted_index.end(), std::size_t{0});
  std::ranges::stable_sort(sorted_index, {}, [this](std::size_t i) { return particles[i]; });
}

double ess(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (!(sum > 0.0)) throw std::domain_error("ess: weights sum to zero");
  double sq = 0.0;
  for (double w : weights) {
    const double v = w / sum;
    sq += v * v;
  }
  return 1.0 / sq;
}

void systematic_ancestors(std::span<const double> weights, double u,
                          std::span<std::size_t> ancestors) {
  const std::size_t m = weights.size();
  if (m == 0) throw std::invalid_argument("systematic_ancestors: no weights");
  const std::size_t draws = ancestors.size();
  const double spacing = 1.0 / static_cast<double>(draws);
  double cumulative = weights[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double target = u + static_cast<double>(k) * spacing;
    while (cumulative <= target && i + 1 < m) cumulative += weights[++i];
    ancestors[k] = i;
  }
}

ParticleSystem resample(const ParticleSystem& system, Rng& rng) {
  const std::size_t m = system.size();
  if (m == 0 || system.weights.size() != m) throw std::invalid_argument("resample: bad system");
  std::vector<std::size_t> ancestors(m);
  systematic_ancestors(system.weights, rng.uniform() / static_cast<double>(m), ancestors);
  ParticleSystem out;
  out.particles.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.particles[k] = system.particles[ancestors[k]];
  out.weights.assign(m, 1.0 / static_cast<double>(m));
  out.ess_before_resampling = system.ess;
  out.ess = static_cast<double>(m);
  out.resampled = true;
  out.sort_index();
  return out;
}

ForwardFilter::ForwardFilter(const TrendModel& model, std::size_t m, double alpha,
                             std::uint64_t seed)
    : model_(&model), m_(m), alpha_(alpha), seed_(seed) {
  if (m < 2) throw std::invalid_argument("particle count must be at least 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  particles_.resize(m);
  Rng rng(seed, 0);
  for (double& x : particles_) x = model.sample_initial(rng);
  weights_.assign(m, 1.0 / static_cast<double>(m));
  log_weights_.assign(m, -std::log(static_cast<double>(m)));
  scratch_.resize(m);
  ancestors_.resize(m);
  ess_ = ess_before_ = static_cast<double>(m);
}

bool ForwardFilter::step(std::size_t n, double y) {
  Rng rng(seed_, n);
  for (double& x : particles_) x = model_->sample_transition(x, rng);

  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m_; ++i) {
    log_weights_[i] += model_->observation_logdensity(particles_[i], y);
    max_lw = std::max(max_lw, log_weights_[i]);
  }
  if (!std::isfinite(max_lw)) throw NumericalError("particle weight normalizer underflow", n);
  double sum = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    weights_[i] = std::exp(log_weights_[i] - max_lw);
    sum += weights_[i];
  }
  const double log_sum = std::log(sum) + max_lw;
  const double inv_sum = 1.0 / sum;
  double sq = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    weights_[i] *= inv_sum;
    log_weights_[i] -= log_sum;
    sq += weights_[i] * weights_[i];
  }
  ess_before_ = 1.0 / sq;
  ess_ = ess_before_;

  if (!(ess_before_ < alpha_ * static_cast<double>(m_))) return false;

  systematic_ancestors(weights_, rng.uniform() / static_cast<double>(m_), ancestors_);
  for (std::size_t k = 0; k < m_; ++k) scratch_[k] = particles_[ancestors_[k]];
  particles_.swap(scratch_);
  weights_.assign(m_, 1.0 / static_cast<double>(m_));
  log_weights_.assign(m_, -std::log(static_cast<double>(m_)));
  ess_ = static_cast<double>(m_);
  return true;
}

ParticleSystem ForwardFilter::snapshot(bool resampled) const {
  ParticleSystem system;
  system.particles = particles_;
  system.weights = weights_;
  system.ess = ess_;
  system.ess_before_resampling = ess_before_;
  system.resampled = resampled;
  system.sort_index();
  return system;
}

FilterHistory run_filter(const TrendModel& model, const TimeSeries& series, std::size_t m,
                         double alpha, std::uint64_t seed) {
  if (series.empty()) throw std::invalid_argument("run_filter: empty series");
  ForwardFilter filter(model, m, alpha, seed);
  FilterHistory history;
  history.m = m;
  history.alpha = alpha;
  history.seed = seed;
  history.systems.reserve(series.size());
  for (std::size_t n = 1; n <= series.size(); ++n) {
    const bool resampled = filter.step(n, series.values[n - 1]);
    history.systems.push_back(filter.snapshot(resampled));
  }
  return history;
}

}  // namespace pfsmooth
