#include "pfsmooth/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "pfsmooth/error.hpp"

namespace pfsmooth {

namespace {

// out[i] = sum_j kernel(j - i) * in[j]. The trend-model kernels are symmetric,
// so the same routine serves the forward convolution and the backward
// correlation of the smoother.
void apply_stencil(const TransitionStencil& stencil, const std::vector<double>& in,
                   std::vector<double>& out, unsigned threads) {
  const auto count = static_cast<std::ptrdiff_t>(in.size());
  const auto reach = static_cast<std::ptrdiff_t>(stencil.reach());
  const double* masses = stencil.masses().data();

  // Restrict to the nonzero support of the input.
  std::ptrdiff_t support_lo = 0;
  while (support_lo < count && in[support_lo] == 0.0) ++support_lo;
  std::ptrdiff_t support_hi = count;
  while (support_hi > support_lo && in[support_hi - 1] == 0.0) --support_hi;

  auto worker = [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      const std::ptrdiff_t lo = std::max(support_lo, i - reach);
      const std::ptrdiff_t hi = std::min(support_hi, i + reach + 1);
      double acc = 0.0;
      const double* k = masses + (lo - i + reach);
      const double* x = in.data() + lo;
      const std::ptrdiff_t len = hi - lo;
#pragma omp simd reduction(+ : acc)
      for (std::ptrdiff_t t = 0; t < len; ++t) acc += k[t] * x[t];
      out[static_cast<std::size_t>(i)] = len > 0 ? acc : 0.0;
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || count < 512) {
    worker(0, count);
    return;
  }
  std::vector<std::jthread> pool;
  const std::ptrdiff_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::ptrdiff_t begin = static_cast<std::ptrdiff_t>(t) * chunk;
    const std::ptrdiff_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(worker, begin, end);
  }
}

double normalize_or_throw(std::vector<double>& values, double step, const char* what,
                          std::size_t n) {
  double sum = 0.0;
  for (double v : values) sum += v;
  const double total = sum * step;
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError(what, n);
  const double scale = 1.0 / total;
  for (double& v : values) v *= scale;
  return total;
}

}  // namespace

TransitionStencil::TransitionStencil(const NoiseFamily& noise, const Grid& grid) {
  grid.validate();
  const std::size_t full_reach = grid.count - 1;
  std::vector<double> half(full_reach + 1);
  const double step = grid.step;
  // Symmetric kernels: evaluate the lower tail to avoid cancellation near 1.
  half[0] = 1.0 - 2.0 * noise.cdf(-0.5 * step);
  for (std::size_t d = 1; d <= full_reach; ++d) {
    const double centre = static_cast<double>(d) * step;
    half[d] = std::max(0.0, noise.cdf(-centre + 0.5 * step) - noise.cdf(-centre - 0.5 * step));
  }
  std::size_t reach = full_reach;
  while (reach > 0 && half[reach] == 0.0) --reach;
  reach_ = reach;
  masses_.resize(2 * reach + 1);
  for (std::size_t d = 0; d <= reach; ++d) {
    masses_[reach + d] = half[d];
    masses_[reach - d] = half[d];
  }
}

GridRun grid_filter(const TrendModel& model, const TimeSeries& series, const Grid& grid,
                    unsigned threads) {
  grid.validate();
  if (series.empty()) throw std::invalid_argument("grid_filter: empty series");
  if (model.noiseless_observations()) {
    throw std::invalid_argument("grid_filter: observation noise must be positive");
  }
  const TransitionStencil stencil(model.system_noise(), grid);
  const std::size_t length = series.size();

  GridRun run;
  run.predicted.reserve(length);
  run.filtered.reserve(length);

  const double var0 = model.initial_std() * model.initial_std();
  GridDensity previous = render_normal(model.initial_mean(), var0, grid);
  std::vector<double> loglik(grid.count);
  for (std::size_t n = 1; n <= length; ++n) {
    GridDensity predicted(grid);
    apply_stencil(stencil, previous.values, predicted.values, threads);
    normalize_or_throw(predicted.values, grid.step, "grid prediction lost all mass", n);

    const double y = series.values[n - 1];
    double max_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.count; ++i) {
      loglik[i] = model.observation_logdensity(grid.point(i), y);
      max_ll = std::max(max_ll, loglik[i]);
    }
    GridDensity filtered(grid);
    for (std::size_t i = 0; i < grid.count; ++i) {
      filtered.values[i] = predicted.values[i] * std::exp(loglik[i] - max_ll);
    }
    normalize_or_throw(filtered.values, grid.step, "grid filter normalizer underflow", n);

    run.predicted.push_back(std::move(predicted));
    previous = filtered;
    run.filtered.push_back(std::move(filtered));
  }
  return run;
}

GridRun grid_smoother(GridRun run, const TrendModel& model, unsigned threads) {
  const std::size_t length = run.filtered.size();
  if (length == 0 || run.predicted.size() != length) {
    throw std::invalid_argument("grid_smoother: filter pass not completed");
  }
  const Grid grid = run.filtered.front().grid;
  const TransitionStencil stencil(model.system_noise(), grid);

  run.smoothed.assign(length, GridDensity{});
  run.smoothed[length - 1] = run.filtered[length - 1];
  std::vector<double> ratio(grid.count);
  std::vector<double> back(grid.count);
  for (std::size_t k = length - 1; k-- > 0;) {
    const auto& next_pred = run.predicted[k + 1].values;
    const auto& next_smooth = run.smoothed[k + 1].values;
    const double floor = kSmootherRatioFloor * *std::ranges::max_element(next_pred);
    for (std::size_t j = 0; j < grid.count; ++j) {
      ratio[j] = next_pred[j] >= floor && next_pred[j] > 0.0 ? next_smooth[j] / next_pred[j] : 0.0;
    }
    apply_stencil(stencil, ratio, back, threads);
    GridDensity smoothed(grid);
    const auto& filt = run.filtered[k].values;
    for (std::size_t i = 0; i < grid.count; ++i) smoothed.values[i] = filt[i] * back[i];
    normalize_or_throw(smoothed.values, grid.step, "grid smoother normalizer underflow", k + 1);
    run.smoothed[k] = std::move(smoothed);
  }
  return run;
}

namespace {
constexpr char kMagic[8] = {'P', 'F', 'S', 'G', 'R', 'I', 'D', '1'};
}

void save_densities(const std::vector<GridDensity>& densities, const std::filesystem::path& path) {
  if (densities.empty()) throw std::invalid_argument("save_densities: nothing to save");
  const Grid grid = densities.front().grid;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    const std::uint64_t length = densities.size();
    const std::uint64_t count = grid.count;
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(&grid.origin), sizeof grid.origin);
    out.write(reinterpret_cast<const char*>(&grid.step), sizeof grid.step);
    for (const auto& d : densities) {
      if (d.grid != grid) throw std::invalid_argument("save_densities: mixed grids");
      out.write(reinterpret_cast<const char*>(d.values.data()),
                static_cast<std::streamsize>(d.values.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<GridDensity> load_densities(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  std::uint64_t length = 0;
  std::uint64_t count = 0;
  Grid grid;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  in.read(reinterpret_cast<char*>(&grid.origin), sizeof grid.origin);
  in.read(reinterpret_cast<char*>(&grid.step), sizeof grid.step);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a density file: " + path.string());
  }
  grid.count = count;
  std::vector<GridDensity> out(length, GridDensity(grid));
  for (auto& d : out) {
    in.read(reinterpret_cast<char*>(d.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  }
  if (!in) throw std::runtime_error("truncated density file: " + path.string());
  return out;
}

}  // namespace pfsmooth
