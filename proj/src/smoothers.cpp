#include "pfsmooth/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kernel_rows.hpp"
#include "pfsmooth/error.hpp"

namespace pfsmooth {

std::string_view to_string(SmootherKind kind) {
  switch (kind) {
    case SmootherKind::Filter: return "filter";
    case SmootherKind::FixedLag: return "fixed-lag";
    case SmootherKind::FFBSm: return "ffbsm";
    case SmootherKind::SFFBSm: return "s-ffbsm";
    case SmootherKind::NSFFBSm: return "ns-ffbsm";
  }
  return "unknown";
}

SmootherKind parse_smoother_kind(std::string_view text) {
  if (text == "filter") return SmootherKind::Filter;
  if (text == "fixed-lag" || text == "fixedlag") return SmootherKind::FixedLag;
  if (text == "ffbsm") return SmootherKind::FFBSm;
  if (text == "s-ffbsm" || text == "sffbsm") return SmootherKind::SFFBSm;
  if (text == "ns-ffbsm" || text == "nsffbsm") return SmootherKind::NSFFBSm;
  throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

namespace {

SmoothedMarginals start_from_filter(const FilterHistory& history, SmootherKind kind) {
  if (history.systems.empty()) throw std::invalid_argument("smoother: empty filter history");
  SmoothedMarginals out;
  out.method = kind;
  out.particles.reserve(history.length());
  out.weights.reserve(history.length());
  for (const auto& system : history.systems) {
    if (system.size() != history.m) throw std::invalid_argument("smoother: ragged history");
    out.particles.push_back(system.particles);
    out.weights.push_back(system.weights);
  }
  return out;
}

// w~_n = w_n * acc, normalized in index order.
void finish_step(std::span<const double> filter_weights, std::span<const double> acc,
                 std::vector<double>& smoothed, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    smoothed[i] = filter_weights[i] * acc[i];
    sum += smoothed[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NumericalError("smoothing weights vanish", n);
  }
  const double inv = 1.0 / sum;
  for (double& w : smoothed) w *= inv;
}

struct Selected {
  std::size_t index;
  double factor;  // 1 / expected inclusion count
};

// Stratified draws proportional to `weights`; factor 1 / (size * w).
void weight_stratified(std::span<const double> weights, std::size_t size, Rng& rng,
                       std::vector<Selected>& out) {
  out.clear();
  const double spacing = 1.0 / static_cast<double>(size);
  double cumulative = weights[0];
  std::size_t i = 0;
  for (std::size_t t = 0; t < size; ++t) {
    const double target = (static_cast<double>(t) + rng.uniform()) * spacing;
    while (cumulative <= target && i + 1 < weights.size()) cumulative += weights[++i];
    // Skip zero-weight tail entries reached through rounding.
    std::size_t k = i;
    while (weights[k] == 0.0 && k > 0) --k;
    if (weights[k] > 0.0) out.push_back({k, 1.0 / (static_cast<double>(size) * weights[k])});
  }
}

}  // namespace

SmoothedMarginals filter_marginals(const FilterHistory& history) {
  return start_from_filter(history, SmootherKind::Filter);
}

void fixed_lag_pass(const TrendModel& model, const TimeSeries& series, std::size_t m,
                    std::span<const std::size_t> lags, double alpha, std::uint64_t seed,
                    const LagVisitor& visit) {
  if (series.empty()) throw std::invalid_argument("fixed_lag_pass: empty series");
  if (lags.empty()) throw std::invalid_argument("fixed_lag_pass: no lags");
  const std::size_t length = series.size();
  const std::size_t max_lag = std::min(*std::ranges::max_element(lags), length - 1);
  const std::size_t slots = max_lag + 1;

  ForwardFilter filter(model, m, alpha, seed);
  // Column for time t lives in slot t % slots; row i is the path of particle i.
  std::vector<std::vector<double>> buffer(slots, std::vector<double>(m));
  std::vector<double> scratch(m);
  auto column = [&](std::size_t t) -> std::vector<double>& { return buffer[t % slots]; };

  for (std::size_t t = 1; t <= length; ++t) {
    const bool resampled = filter.step(t, series.values[t - 1]);
    if (resampled) {
      const auto ancestors = filter.ancestors();
      const std::size_t oldest = t > max_lag ? t - max_lag : 1;
      for (std::size_t s = oldest; s < t; ++s) {
        auto& col = column(s);
        for (std::size_t k = 0; k < m; ++k) scratch[k] = col[ancestors[k]];
        col.swap(scratch);
      }
    }
    std::ranges::copy(filter.particles(), column(t).begin());

    const auto weights = filter.weights();
    for (std::size_t lag : lags) {
      if (t > lag) visit(t - lag, lag, column(t - lag), weights);
    }
    if (t == length) {
      for (std::size_t lag : lags) {
        const std::size_t first = length > lag ? length - lag + 1 : 1;
        for (std::size_t n = first; n <= length; ++n) visit(n, lag, column(n), weights);
      }
    }
  }
}

SmoothedMarginals fixed_lag_smooth(const TrendModel& model, const TimeSeries& series,
                                   std::size_t m, std::size_t lag, double alpha,
                                   std::uint64_t seed) {
  SmoothedMarginals out;
  out.method = SmootherKind::FixedLag;
  out.lag = lag;
  out.particles.resize(series.size());
  out.weights.resize(series.size());
  const std::size_t lags[] = {lag};
  fixed_lag_pass(model, series, m, lags, alpha, seed,
                 [&out](std::size_t n, std::size_t, std::span<const double> particles,
                        std::span<const double> weights) {
                   out.particles[n - 1].assign(particles.begin(), particles.end());
                   out.weights[n - 1].assign(weights.begin(), weights.end());
                 });
  return out;
}

SmoothedMarginals ffbsm(const FilterHistory& history, const TrendModel& model) {
  SmoothedMarginals out = start_from_filter(history, SmootherKind::FFBSm);
  const detail::TransitionKernel kernel(model.system_noise());
  const std::size_t m = history.m;
  std::vector<double> row(m);
  std::vector<double> acc(m);

  for (std::size_t n = history.length() - 1; n >= 1; --n) {
    const ParticleSystem& current = history.systems[n - 1];
    const std::vector<double>& next_x = history.systems[n].particles;
    const std::vector<double>& next_w = out.weights[n];
    std::ranges::fill(acc, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (next_w[j] == 0.0) continue;
      if (!kernel.row(next_x[j], current.particles, row)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      const double denominator = detail::dot(current.weights, row);
      if (!(denominator > 0.0)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      detail::axpy(next_w[j] / denominator, row, acc);
    }
    finish_step(current.weights, acc, out.weights[n - 1], n);
  }
  return out;
}

SmoothedMarginals s_ffbsm(const FilterHistory& history, const TrendModel& model,
                          const SubsampleOptions& options) {
  const std::size_t m = history.m;
  const std::size_t size = options.subsample_size;
  if (size < 1 || size > m) throw std::invalid_argument("s_ffbsm: subsample size must lie in [1, m]");
  const bool blocked = options.strategy != SubsampleStrategy::WeightStratified;
  if (blocked && m % size != 0) {
    throw std::invalid_argument("s_ffbsm: subsample size " + std::to_string(size) +
                                " does not divide m=" + std::to_string(m));
  }
  const std::size_t interval = m / size;
  if (options.fixed_offset && *options.fixed_offset >= interval) {
    throw std::invalid_argument("s_ffbsm: fixed offset must be below m / subsample size");
  }

  SmoothedMarginals out = start_from_filter(history, SmootherKind::SFFBSm);
  out.subsample_size = size;
  const detail::TransitionKernel kernel(model.system_noise());
  std::vector<double> row(m);
  std::vector<double> acc(m);
  std::vector<Selected> outer;  // indices j at time n+1
  std::vector<Selected> inner;  // indices k at time n
  const bool full = blocked && size == m;

  for (std::size_t n = history.length() - 1; n >= 1; --n) {
    const ParticleSystem& current = history.systems[n - 1];
    const std::vector<double>& next_x = history.systems[n].particles;
    const std::vector<double>& next_w = out.weights[n];
    Rng rng(options.seed, n);

    outer.clear();
    switch (options.strategy) {
      case SubsampleStrategy::EquallySpaced: {
        const std::size_t offset = options.fixed_offset ? *options.fixed_offset : rng.below(interval);
        for (std::size_t t = 0; t < size; ++t) {
          outer.push_back({offset + t * interval, static_cast<double>(interval)});
        }
        inner = outer;
        break;
      }
      case SubsampleStrategy::StratifiedRandom:
        for (std::size_t t = 0; t < size; ++t) {
          outer.push_back({t * interval + rng.below(interval), static_cast<double>(interval)});
        }
        inner = outer;
        break;
      case SubsampleStrategy::WeightStratified:
        weight_stratified(current.weights, size, rng, inner);
        weight_stratified(next_w, size, rng, outer);
        break;
    }

    std::ranges::fill(acc, 0.0);
    for (const Selected& sel : outer) {
      const std::size_t j = sel.index;
      if (next_w[j] == 0.0) continue;
      if (!kernel.row(next_x[j], current.particles, row)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      double denominator = 0.0;
      if (full) {
        denominator = detail::dot(current.weights, row);
      } else {
        for (const Selected& k : inner) denominator += k.factor * current.weights[k.index] * row[k.index];
      }
      if (!(denominator > 0.0)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      const double coefficient = full ? next_w[j] / denominator : sel.factor * next_w[j] / denominator;
      detail::axpy(coefficient, row, acc);
    }
    finish_step(current.weights, acc, out.weights[n - 1], n);
  }
  return out;
}

SubsetSampler::SubsetSampler(std::size_t capacity)
    : perm_(capacity), swaps_(capacity), out_(capacity), taken_(capacity, 0) {
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

std::span<const std::size_t> SubsetSampler::draw(IndexRange range, std::size_t size, Rng& source) {
  // Work on a local copy so the generator state stays in registers.
  Rng rng = source;
  struct WriteBack {
    Rng& to;
    Rng& from;
    ~WriteBack() { to = from; }
  } write_back{source, rng};
  const std::size_t population = range.size();
  if (population > perm_.size()) throw std::invalid_argument("SubsetSampler: range exceeds capacity");
  const std::size_t take = std::min(size, population);
  if (take == population) {
    for (std::size_t t = 0; t < take; ++t) out_[t] = range.begin + t;
    return {out_.data(), take};
  }
  if (take * 4 <= population) {
    // Sparse case: redraw collisions. Cheaper than touching the permutation.
    for (std::size_t t = 0; t < take;) {
      const std::size_t r = rng.below(population);
      if (taken_[r]) continue;
      taken_[r] = 1;
      out_[t++] = range.begin + r;
    }
    for (std::size_t t = 0; t < take; ++t) taken_[out_[t] - range.begin] = 0;
    return {out_.data(), take};
  }
  for (std::size_t t = 0; t < take; ++t) {
    const std::size_t r = t + rng.below(population - t);
    std::swap(perm_[t], perm_[r]);
    swaps_[t] = r;
    out_[t] = range.begin + perm_[t];
  }
  for (std::size_t t = take; t-- > 0;) std::swap(perm_[t], perm_[swaps_[t]]);
  return {out_.data(), take};
}

SmoothedMarginals ns_ffbsm(const FilterHistory& history, const TrendModel& model,
                           const NeighborhoodOptions& options) {
  const std::size_t m = history.m;
  const std::size_t size = options.subsample_size;
  if (size < 1) throw std::invalid_argument("ns_ffbsm: subsample size must be positive");
  const double epsilon = options.epsilon > 0.0 ? options.epsilon : 1.0 / static_cast<double>(m);
  if (!(epsilon < 1.0)) throw std::invalid_argument("ns_ffbsm: epsilon must lie in (0, 1)");
  const double radius =
      options.radius ? *options.radius : tail_threshold(model.system_noise(), epsilon).radius;
  if (!(radius >= 0.0)) throw std::invalid_argument("ns_ffbsm: radius must be nonnegative");

  SmoothedMarginals out = start_from_filter(history, SmootherKind::NSFFBSm);
  out.subsample_size = size;
  out.epsilon = epsilon;
  const detail::TransitionKernel kernel(model.system_noise());
  SubsetSampler sampler(m);
  std::vector<double> sorted_x(m);
  std::vector<double> sorted_w(m);
  std::vector<double> acc(m);
  std::vector<double> sub_x(m);
  std::vector<double> sub_w(m);
  std::vector<double> row(m);
  std::vector<double> acc_by_index(m);

  for (std::size_t n = history.length() - 1; n >= 1; --n) {
    const ParticleSystem& current = history.systems[n - 1];
    const std::vector<double>& next_x = history.systems[n].particles;
    const std::vector<double>& next_w = out.weights[n];
    for (std::size_t p = 0; p < m; ++p) {
      sorted_x[p] = current.particles[current.sorted_index[p]];
      sorted_w[p] = current.weights[current.sorted_index[p]];
    }
    std::ranges::fill(acc, 0.0);

    for (std::size_t j = 0; j < m; ++j) {
      if (next_w[j] == 0.0) continue;
      IndexRange range = neighborhood_range(sorted_x, next_x[j], radius);
      if (range.empty()) {
        ++out.diagnostics.empty_neighborhoods;
        std::size_t p = range.begin;
        if (p == m || (p > 0 && next_x[j] - sorted_x[p - 1] <= sorted_x[p] - next_x[j])) --p;
        range = {p, p + 1};
      }
      Rng rng(options.seed, n, j);
      const auto positions = sampler.draw(range, size, rng);
      const std::size_t count = positions.size();
      for (std::size_t t = 0; t < count; ++t) {
        sub_x[t] = sorted_x[positions[t]];
        sub_w[t] = sorted_w[positions[t]];
      }
      const std::span<double> sub_row(row.data(), count);
      if (!kernel.row(next_x[j], {sub_x.data(), count}, sub_row)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      const double inverse_inclusion =
          static_cast<double>(range.size()) / static_cast<double>(count);
      const double denominator = inverse_inclusion * detail::dot({sub_w.data(), count}, sub_row);
      if (!(denominator > 0.0)) {
        ++out.diagnostics.dropped_denominators;
        continue;
      }
      const double coefficient = inverse_inclusion * next_w[j] / denominator;
      for (std::size_t t = 0; t < count; ++t) acc[positions[t]] += coefficient * sub_row[t];
    }
    for (std::size_t p = 0; p < m; ++p) acc_by_index[current.sorted_index[p]] = acc[p];
    finish_step(current.weights, acc_by_index, out.weights[n - 1], n);
  }
  return out;
}

double truncated_denominator(const ParticleSystem& previous, const TrendModel& model,
                             double x_next, double radius) {
  const IndexRange range = neighborhood_range(previous, x_next, radius);
  double sum = 0.0;
  for (std::size_t p = range.begin; p < range.end; ++p) {
    const std::size_t k = previous.sorted_index[p];
    sum += previous.weights[k] * std::exp(model.transition_logdensity(previous.particles[k], x_next));
  }
  return sum;
}

double estimate_denominator(const ParticleSystem& previous, const TrendModel& model,
                            double x_next, double radius, std::size_t subsample_size, Rng& rng) {
  if (subsample_size < 1) throw std::invalid_argument("estimate_denominator: empty subsample");
  const IndexRange range = neighborhood_range(previous, x_next, radius);
  if (range.empty()) return 0.0;
  SubsetSampler sampler(range.size());
  const auto positions = sampler.draw({0, range.size()}, subsample_size, rng);
  double sum = 0.0;
  for (std::size_t p : positions) {
    const std::size_t k = previous.sorted_index[range.begin + p];
    sum += previous.weights[k] * std::exp(model.transition_logdensity(previous.particles[k], x_next));
  }
  return sum * static_cast<double>(range.size()) / static_cast<double>(positions.size());
}

std::vector<MarginalMoments> smoothing_moments(const SmoothedMarginals& marginals) {
  std::vector<MarginalMoments> out;
  out.reserve(marginals.length());
  for (std::size_t n = 0; n < marginals.length(); ++n) {
    const auto& x = marginals.particles[n];
    const auto& w = marginals.weights[n];
    double sum = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum += w[i];
      mean += w[i] * x[i];
    }
    mean /= sum;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean;
      var += w[i] * d * d;
    }
    out.push_back({mean, std::sqrt(std::max(0.0, var / sum))});
  }
  return out;
}

}  // namespace pfsmooth
