#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfsmooth/config.hpp"
#include "pfsmooth/csv.hpp"
#include "pfsmooth/grid.hpp"
#include "pfsmooth/model.hpp"
#include "pfsmooth/smoothers.hpp"

namespace pfsmooth {

/// Observations for a config: the data file when given, otherwise the
/// default level schedule generated under the configured model.
/// Data files hold one value per line, or CSV with a `y` column.
TimeSeries load_or_generate(const ExperimentConfig& config);

/// CSV data file with header n,y,trend.
void write_data_csv(const GeneratedSeries& data, std::ostream& out);
TimeSeries read_series_file(const std::filesystem::path& path);

/// Reference kind actually used: Auto means Kalman for Gaussian noise.
ReferenceKind resolve_reference(const ExperimentConfig& config);

/// Hex FNV-1a digest over model, grid, reference kind and observation values.
std::string oracle_key(const ExperimentConfig& config, const TimeSeries& series);

/// Reference smoothed densities for one (model, grid, data) triple.
struct Reference {
  ReferenceKind kind = ReferenceKind::Grid;
  std::string key;
  std::vector<GridDensity> smoothed;
};

Reference compute_reference(const ExperimentConfig& config, const TimeSeries& series);

/// In-memory cache of references, optionally backed by a directory of
/// binary dumps named oracle-<key>.bin. Thread safe.
class OracleCache {
 public:
  explicit OracleCache(std::optional<std::filesystem::path> directory = std::nullopt);

  std::shared_ptr<const Reference> get(const ExperimentConfig& config, const TimeSeries& series);

 private:
  std::optional<std::filesystem::path> directory_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Reference>> entries_;
};

struct Replication {
  std::uint64_t seed = 0;
  double dist = 0.0;
  double seconds = 0.0;
  SmootherDiagnostics diagnostics;
};

struct ExperimentResult {
  std::vector<Replication> replications;  // ordered by replication index
  double dist_mean = 0.0;
  std::optional<double> dist_std;  // absent for a single replication
  double time_mean = 0.0;
  std::optional<double> time_std;
};

/// Seed of replication r.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t r);

/// Runs one replication: filter and smoother with `seed`, histogram
/// conversion, Dist against the reference.
Replication run_replication(const ExperimentConfig& config, const TimeSeries& series,
                            const Reference& reference, std::uint64_t seed);

/// nsim replications spread across config.threads workers. Results do not
/// depend on the worker count. A failing replication rethrows as
/// std::runtime_error naming its index.
ExperimentResult run_experiment(const ExperimentConfig& config, const TimeSeries& series,
                                const Reference& reference);
ExperimentResult run_experiment(const ExperimentConfig& config, OracleCache& cache);

/// Mean and sample standard deviation (absent when fewer than two values).
std::pair<double, std::optional<double>> mean_std(std::span<const double> values);

inline constexpr const char* kSweepColumns[] = {
    "model", "method", "m", "subsample_size", "lag", "alpha",
    "nsim", "dist_mean", "dist_std", "time_mean_s", "time_std_s"};

void write_sweep_header(CsvWriter& csv);
/// With omit_timing the time columns are left empty, keeping output byte-stable.
void write_sweep_row(CsvWriter& csv, const ExperimentConfig& config,
                     const ExperimentResult& result, bool omit_timing);

/// Cross product of methods, m values and subsample sizes over a base config.
/// Combinations the config validation rejects are skipped.
std::vector<ExperimentConfig> sweep_grid(const ExperimentConfig& base,
                                         std::span<const SmootherKind> methods,
                                         std::span<const std::size_t> ms,
                                         std::span<const std::size_t> subsample_sizes);

/// Runs configs in order, writing and flushing each row as it completes.
/// Returns the number of rows written.
std::size_t sweep(std::span<const ExperimentConfig> configs, OracleCache& cache, std::ostream& out,
                  bool omit_timing);

struct LagPoint {
  std::size_t lag = 0;
  double dist_mean = 0.0;
  std::optional<double> dist_std;
};

struct LagSearchResult {
  std::size_t best_lag = 0;
  std::vector<LagPoint> curve;  // in candidate order
};

/// Fixed-lag Dist for every candidate lag; one forward pass per replication
/// serves all candidates. Ties go to the smaller lag.
LagSearchResult optimal_lag_search(const ExperimentConfig& config, const TimeSeries& series,
                                   const Reference& reference, std::span<const std::size_t> lags);

}  // namespace pfsmooth
