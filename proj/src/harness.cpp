#include "pfsmooth/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pfsmooth/grid_oracle.hpp"
#include "pfsmooth/kalman.hpp"
#include "pfsmooth/metrics.hpp"
#include "pfsmooth/particle_filter.hpp"

namespace pfsmooth {

namespace {

struct Fnv1a {
  std::uint64_t state = 0xcbf29ce484222325ULL;

  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ULL;
    }
  }
  void text(std::string_view s) {
    bytes(s.data(), s.size());
    bytes("\n", 1);
  }
};

std::string hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

/// Runs work(r) for r in [0, count) on `threads` workers. The first
/// exception by index wins, so failures are reported deterministically.
template <class Work>
void parallel_for(std::size_t count, unsigned threads, Work&& work) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        work(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (std::size_t r = 0; r < count; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const std::exception& e) {
      throw std::runtime_error("replication " + std::to_string(r) + ": " + e.what());
    }
  }
}

SmoothedMarginals smooth(const ExperimentConfig& config, const TrendModel& model,
                         const TimeSeries& series, std::uint64_t seed) {
  if (config.method == SmootherKind::FixedLag) {
    return fixed_lag_smooth(model, series, config.m, config.lag, config.alpha, seed);
  }
  const FilterHistory history = run_filter(model, series, config.m, config.alpha, seed);
  const std::uint64_t smoother_seed = derive_seed(seed, 0x5300);
  switch (config.method) {
    case SmootherKind::Filter:
      return filter_marginals(history);
    case SmootherKind::FFBSm:
      return ffbsm(history, model);
    case SmootherKind::SFFBSm:
      return s_ffbsm(history, model,
                     {.subsample_size = config.subsample_size,
                      .strategy = config.strategy,
                      .seed = smoother_seed,
                      .fixed_offset = std::nullopt});
    case SmootherKind::NSFFBSm:
      return ns_ffbsm(history, model,
                      {.subsample_size = config.subsample_size,
                       .epsilon = config.epsilon,
                       .radius = std::nullopt,
                       .seed = smoother_seed});
    case SmootherKind::FixedLag:
      break;
  }
  throw std::logic_error("unhandled smoother");
}

/// Dist of one step against a dense reference without building a dense
/// estimate: sum D^2 dx - 2 sum_c D_c W_c + sum_c W_c^2 / dx, W_c = cell mass.
class SparseDist {
 public:
  explicit SparseDist(const Grid& grid) : grid_(grid), mass_(grid.count, 0.0) {}

  double step(const GridDensity& reference, double reference_sq, std::span<const double> particles,
              std::span<const double> weights) {
    const double lower = grid_.lower_edge();
    const double inv_step = 1.0 / grid_.step;
    const auto last = static_cast<double>(grid_.count - 1);
    touched_.clear();
    for (std::size_t i = 0; i < particles.size(); ++i) {
      double cell = std::floor((particles[i] - lower) * inv_step);
      if (!(cell >= 0.0 && cell <= last)) cell = cell > last ? last : 0.0;
      const auto c = static_cast<std::size_t>(cell);
      if (mass_[c] == 0.0) touched_.push_back(c);
      mass_[c] += weights[i];
    }
    double cross = 0.0;
    double self = 0.0;
    for (std::size_t c : touched_) {
      cross += reference.values[c] * mass_[c];
      self += mass_[c] * mass_[c];
      mass_[c] = 0.0;
    }
    return std::max(0.0, reference_sq - 2.0 * cross + self * inv_step);
  }

 private:
  Grid grid_;
  std::vector<double> mass_;
  std::vector<std::size_t> touched_;
};

void check_series(const Reference& reference, const TimeSeries& series) {
  if (reference.smoothed.size() != series.size()) {
    throw std::invalid_argument("reference length " + std::to_string(reference.smoothed.size()) +
                                " does not match series length " + std::to_string(series.size()));
  }
}

}  // namespace

TimeSeries read_series_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open data file " + path.string());
  std::string header;
  while (std::getline(in, header)) {
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (!header.empty() && header.front() != '#') break;
  }
  if (header.find(',') == std::string::npos && header != "y") return load_time_series(path);

  // CSV: locate the y column.
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    for (std::string name; std::getline(ss, name, ',');) names.push_back(name);
  }
  const auto it = std::ranges::find(names, "y");
  if (it == names.end()) throw std::runtime_error("data file " + path.string() + " has no y column");
  const auto column = static_cast<std::size_t>(it - names.begin());
  std::string text;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    std::stringstream ss(line);
    std::string field;
    for (std::size_t c = 0; c <= column; ++c) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("data file " + path.string() + ": short row '" + line + "'");
      }
    }
    text += field;
    text += '\n';
  }
  TimeSeries series = parse_time_series(text);
  if (series.empty()) throw std::runtime_error("data file " + path.string() + " has no values");
  return series;
}

void write_data_csv(const GeneratedSeries& data, std::ostream& out) {
  CsvWriter csv(out);
  csv.row({"n", "y", "trend"});
  for (std::size_t n = 0; n < data.series.size(); ++n) {
    csv.field(n + 1).field(data.series.values[n]).field(data.trend[n]);
    csv.end_row();
  }
}

TimeSeries load_or_generate(const ExperimentConfig& config) {
  if (config.data.path) return read_series_file(*config.data.path);
  return generate_test_series(config.model.build(), default_schedule(), config.data.length,
                              config.data.seed)
      .series;
}

ReferenceKind resolve_reference(const ExperimentConfig& config) {
  if (config.reference != ReferenceKind::Auto) return config.reference;
  return config.model.family == NoiseKind::Gaussian ? ReferenceKind::Kalman : ReferenceKind::Grid;
}

std::string oracle_key(const ExperimentConfig& config, const TimeSeries& series) {
  const ModelConfig& mc = config.model;
  Fnv1a h;
  h.text(to_string(resolve_reference(config)));
  h.text(to_string(mc.family));
  for (double v : {mc.scale(), mc.sigma, mc.family == NoiseKind::TruncatedCauchy ? mc.truncation : 0.0,
                   mc.initial_mean, mc.initial_std, config.grid.origin, config.grid.step}) {
    h.text(format_double(v));
  }
  h.text(std::to_string(config.grid.count));
  h.text(std::to_string(series.size()));
  for (double y : series.values) h.text(format_double(y));
  return hex(h.state);
}

Reference compute_reference(const ExperimentConfig& config, const TimeSeries& series) {
  Reference out;
  out.kind = resolve_reference(config);
  out.key = oracle_key(config, series);
  const TrendModel model = config.model.build();
  if (out.kind == ReferenceKind::Kalman) {
    const LinearGaussianSpec spec = linear_gaussian_spec(model);
    const KalmanRun run = kalman_smoother(kalman_filter(spec, series), spec);
    out.smoothed = moments_to_grid(run.smoothed, config.grid);
  } else {
    GridRun run = grid_smoother(grid_filter(model, series, config.grid, config.threads), model,
                                config.threads);
    out.smoothed = std::move(run.smoothed);
  }
  return out;
}

OracleCache::OracleCache(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {}

std::shared_ptr<const Reference> OracleCache::get(const ExperimentConfig& config,
                                                  const TimeSeries& series) {
  const std::string key = oracle_key(config, series);
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;

  std::shared_ptr<Reference> ref;
  std::optional<std::filesystem::path> file;
  if (directory_) file = *directory_ / ("oracle-" + key + ".bin");
  if (file && std::filesystem::exists(*file)) {
    ref = std::make_shared<Reference>();
    ref->kind = resolve_reference(config);
    ref->key = key;
    ref->smoothed = load_densities(*file);
    if (ref->smoothed.size() != series.size() || ref->smoothed.front().grid != config.grid) {
      throw std::runtime_error("cached oracle " + file->string() + " does not match config");
    }
  } else {
    ref = std::make_shared<Reference>(compute_reference(config, series));
    if (file) {
      std::filesystem::create_directories(*directory_);
      save_densities(ref->smoothed, *file);
    }
  }
  entries_.emplace(key, ref);
  return ref;
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t r) {
  return derive_seed(master_seed, r);
}

Replication run_replication(const ExperimentConfig& config, const TimeSeries& series,
                            const Reference& reference, std::uint64_t seed) {
  check_series(reference, series);
  const TrendModel model = config.model.build();
  Replication out;
  out.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  SmoothedMarginals marginals = smooth(config, model, series, seed);
  const std::vector<GridDensity> estimate = marginals_to_grid(marginals, config.grid);
  const auto stop = std::chrono::steady_clock::now();

  out.seconds = std::chrono::duration<double>(stop - start).count();
  out.diagnostics = marginals.diagnostics;
  out.dist = dist(reference.smoothed, estimate).value;
  return out;
}

std::pair<double, std::optional<double>> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, std::nullopt};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nullopt};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const TimeSeries& series,
                                const Reference& reference) {
  config.validate();
  check_series(reference, series);
  ExperimentResult result;
  result.replications.resize(config.nsim);
  parallel_for(config.nsim, config.threads, [&](std::size_t r) {
    result.replications[r] =
        run_replication(config, series, reference, replication_seed(config.master_seed, r));
  });
  std::vector<double> dists;
  std::vector<double> times;
  for (const auto& rep : result.replications) {
    dists.push_back(rep.dist);
    times.push_back(rep.seconds);
  }
  std::tie(result.dist_mean, result.dist_std) = mean_std(dists);
  std::tie(result.time_mean, result.time_std) = mean_std(times);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, OracleCache& cache) {
  config.validate();
  const TimeSeries series = load_or_generate(config);
  const auto reference = cache.get(config, series);
  return run_experiment(config, series, *reference);
}

void write_sweep_header(CsvWriter& csv) {
  for (const char* name : kSweepColumns) csv.field(std::string_view(name));
  csv.end_row();
}

void write_sweep_row(CsvWriter& csv, const ExperimentConfig& config,
                     const ExperimentResult& result, bool omit_timing) {
  csv.field(to_string(config.model.family))
      .field(to_string(config.method))
      .field(config.m)
      .field(config.subsample_size)
      .field(config.lag)
      .field(config.alpha)
      .field(config.nsim)
      .field(result.dist_mean)
      .field(result.dist_std);
  if (omit_timing) {
    csv.field(std::string_view{}).field(std::string_view{});
  } else {
    csv.field(result.time_mean).field(result.time_std);
  }
  csv.end_row();
}

std::vector<ExperimentConfig> sweep_grid(const ExperimentConfig& base,
                                         std::span<const SmootherKind> methods,
                                         std::span<const std::size_t> ms,
                                         std::span<const std::size_t> subsample_sizes) {
  std::vector<ExperimentConfig> out;
  for (SmootherKind method : methods) {
    const bool subsampled = method == SmootherKind::SFFBSm || method == SmootherKind::NSFFBSm;
    for (std::size_t m : ms) {
      const std::vector<std::size_t> sizes =
          subsampled ? std::vector<std::size_t>(subsample_sizes.begin(), subsample_sizes.end())
                     : std::vector<std::size_t>{0};
      for (std::size_t size : sizes) {
        ExperimentConfig c = base;
        c.method = method;
        c.m = m;
        c.subsample_size = size;
        if (method != SmootherKind::FixedLag) c.lag = 0;
        if (subsampled && size > m) continue;
        try {
          c.validate();
        } catch (const std::invalid_argument&) {
          continue;
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::size_t sweep(std::span<const ExperimentConfig> configs, OracleCache& cache, std::ostream& out,
                  bool omit_timing) {
  CsvWriter csv(out);
  write_sweep_header(csv);
  out.flush();
  std::size_t rows = 0;
  for (const auto& config : configs) {
    const ExperimentResult result = run_experiment(config, cache);
    write_sweep_row(csv, config, result, omit_timing);
    out.flush();
    ++rows;
  }
  return rows;
}

LagSearchResult optimal_lag_search(const ExperimentConfig& config, const TimeSeries& series,
                                   const Reference& reference, std::span<const std::size_t> lags) {
  if (lags.empty()) throw std::invalid_argument("optimal_lag_search: no candidate lags");
  if (config.m < 2 || config.nsim < 1) throw std::invalid_argument("optimal_lag_search: bad m or nsim");
  check_series(reference, series);
  const TrendModel model = config.model.build();
  const std::size_t length = series.size();

  std::vector<double> reference_sq(length);
  for (std::size_t n = 0; n < length; ++n) {
    double s = 0.0;
    for (double d : reference.smoothed[n].values) s += d * d;
    reference_sq[n] = s * config.grid.step;
  }

  std::vector<std::size_t> slot_of_lag;  // lag value -> index in `lags`
  const std::size_t max_lag = *std::ranges::max_element(lags);
  slot_of_lag.assign(max_lag + 1, lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (slot_of_lag[lags[i]] != lags.size()) throw std::invalid_argument("duplicate candidate lag");
    slot_of_lag[lags[i]] = i;
  }

  // dists[r][i]: Dist of replication r at candidate i.
  std::vector<std::vector<double>> dists(config.nsim, std::vector<double>(lags.size(), 0.0));
  parallel_for(config.nsim, config.threads, [&](std::size_t r) {
    SparseDist sparse(config.grid);
    auto& row = dists[r];
    fixed_lag_pass(model, series, config.m, lags, config.alpha,
                   replication_seed(config.master_seed, r),
                   [&](std::size_t n, std::size_t lag, std::span<const double> particles,
                       std::span<const double> weights) {
                     row[slot_of_lag[lag]] +=
                         sparse.step(reference.smoothed[n - 1], reference_sq[n - 1], particles, weights);
                   });
  });

  LagSearchResult out;
  std::vector<double> values(config.nsim);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    for (std::size_t r = 0; r < config.nsim; ++r) values[r] = dists[r][i];
    const auto [mean, sd] = mean_std(values);
    out.curve.push_back({lags[i], mean, sd});
  }
  const auto best = std::ranges::min_element(out.curve, [](const LagPoint& a, const LagPoint& b) {
    return a.dist_mean < b.dist_mean || (a.dist_mean == b.dist_mean && a.lag < b.lag);
  });
  out.best_lag = best->lag;
  return out;
}

}  // namespace pfsmooth
