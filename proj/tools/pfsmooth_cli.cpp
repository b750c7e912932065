// pfsmooth: command-line experiment harness.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pfsmooth/config.hpp"
#include "pfsmooth/csv.hpp"
#include "pfsmooth/grid.hpp"
#include "pfsmooth/harness.hpp"
#include "pfsmooth/neighborhood.hpp"

namespace {

using namespace pfsmooth;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Options shared by every subcommand. Scalar settings are kept as text and
/// forwarded to apply_setting only when given, so they override --config.
struct CommonOptions {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> given;  // setting key -> flag value
  std::vector<std::string> m_values;
  std::vector<std::string> ms_values;
  std::optional<std::string> out;
  std::optional<std::string> cache_dir;
  bool omit_timing = false;
};

void add_setting(CLI::App& app, CommonOptions& opts, const std::string& flag, const std::string& key,
                 const std::string& help) {
  app.add_option_function<std::string>(
      flag, [&opts, key](const std::string& value) { opts.given[key] = value; }, help);
}

void add_common(CLI::App& app, CommonOptions& opts, bool list_m) {
  app.add_option("--config", opts.config_file, "key=value settings file; flags override it");
  add_setting(app, opts, "--model", "model", "gauss | cauchy | tcauchy");
  add_setting(app, opts, "--tau", "tau", "system noise scale (family default when omitted)");
  add_setting(app, opts, "--sigma", "sigma", "observation noise std");
  add_setting(app, opts, "--truncation", "truncation", "truncated-Cauchy bound on |v|");
  add_setting(app, opts, "--method", "method", "filter | fixed-lag | ffbsm | s-ffbsm | ns-ffbsm");
  add_setting(app, opts, "--lag", "lag", "fixed-lag L");
  add_setting(app, opts, "--alpha", "alpha", "resample when ESS < alpha * m");
  add_setting(app, opts, "--eps", "eps", "neighborhood exceedance level (0: 1/m)");
  add_setting(app, opts, "--strategy", "strategy",
              "s-ffbsm index selection: equally-spaced | stratified | weight-stratified");
  add_setting(app, opts, "--nsim", "nsim", "replications");
  add_setting(app, opts, "--seed", "seed", "master seed");
  add_setting(app, opts, "--data", "data", "observation file (one value per line, or CSV with y)");
  add_setting(app, opts, "--N", "N", "generated series length");
  add_setting(app, opts, "--data-seed", "data-seed", "seed of the generated series");
  add_setting(app, opts, "--reference", "reference", "auto | kalman | grid");
  add_setting(app, opts, "--threads", "threads", "worker threads");
  add_setting(app, opts, "--grid-origin", "grid-origin", "grid lower bound");
  add_setting(app, opts, "--grid-step", "grid-step", "grid spacing");
  add_setting(app, opts, "--grid-count", "grid-count", "grid points");
  if (list_m) {
    app.add_option("--m", opts.m_values, "particle counts (comma separated)")->delimiter(',');
    app.add_option("--ms", opts.ms_values, "subsample sizes (comma separated)")->delimiter(',');
  } else {
    add_setting(app, opts, "--m", "m", "particle count");
    add_setting(app, opts, "--ms", "ms", "subsample size (m_s or m_small)");
  }
  app.add_option("--out", opts.out, "output CSV (stdout when omitted)");
  app.add_option("--cache-dir", opts.cache_dir, "directory for persisted grid oracles");
  app.add_flag("--omit-timing", opts.omit_timing, "leave time columns empty");
}

ExperimentConfig build_config(const CommonOptions& opts) {
  ExperimentConfig config;
  try {
    if (opts.config_file) {
      const Settings settings = load_settings(*opts.config_file);
      apply_settings(config, settings);
    }
    for (const auto& [key, value] : opts.given) apply_setting(config, key, value);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return config;
}

std::size_t parse_count(const std::string& text, const char* what) {
  std::size_t out = 0;
  double as_double = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return out;
  // Accept 1e4 style.
  auto [p2, e2] = std::from_chars(text.data(), text.data() + text.size(), as_double);
  if (e2 == std::errc{} && p2 == text.data() + text.size() && as_double >= 0 &&
      as_double == static_cast<double>(static_cast<std::size_t>(as_double))) {
    return static_cast<std::size_t>(as_double);
  }
  throw UsageError(std::string("bad ") + what + " value '" + text + "'");
}

std::vector<std::size_t> parse_counts(const std::vector<std::string>& texts, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& t : texts) out.push_back(parse_count(t, what));
  return out;
}

/// "a:b" (inclusive range), "a:b:step", or a comma separated list.
std::vector<std::size_t> parse_lags(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::size_t> parts;
    std::size_t pos = 0;
    while (true) {
      const auto next = text.find(':', pos);
      parts.push_back(parse_count(text.substr(pos, next - pos), "lag"));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("bad lag range '" + text + "'");
    const std::size_t step = parts.size() == 3 ? parts[2] : 1;
    if (step == 0 || parts[1] < parts[0]) throw UsageError("bad lag range '" + text + "'");
    for (std::size_t l = parts[0]; l <= parts[1]; l += step) out.push_back(l);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    out.push_back(parse_count(text.substr(pos, next - pos), "lag"));
    pos = next + 1;
  }
  return out;
}

/// Output stream: the --out file (written whole, then closed) or stdout.
class Output {
 public:
  explicit Output(const std::optional<std::string>& path) {
    if (path) {
      file_.open(*path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot write " + *path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void close() {
    stream().flush();
    if (file_.is_open()) {
      file_.close();
      if (file_.fail()) throw std::runtime_error("write failed");
    }
  }

 private:
  std::ofstream file_;
};

OracleCache make_cache(const CommonOptions& opts) {
  if (opts.cache_dir) return OracleCache(std::filesystem::path(*opts.cache_dir));
  return OracleCache();
}

int cmd_generate_data(const CommonOptions& opts) {
  const ExperimentConfig config = build_config(opts);
  const GeneratedSeries data = generate_test_series(config.model.build(), default_schedule(),
                                                    config.data.length, config.data.seed);
  Output out(opts.out);
  write_data_csv(data, out.stream());
  out.close();
  return 0;
}

int cmd_oracle(const CommonOptions& opts) {
  const ExperimentConfig config = build_config(opts);
  config.grid.validate();
  const TimeSeries series = load_or_generate(config);
  OracleCache cache = make_cache(opts);
  const auto reference = cache.get(config, series);
  Output out(opts.out);
  CsvWriter csv(out.stream());
  csv.row({"n", "mean", "var"});
  for (std::size_t n = 0; n < reference->smoothed.size(); ++n) {
    const GridDensity& d = reference->smoothed[n];
    csv.field(n + 1).field(d.mean()).field(d.variance());
    csv.end_row();
  }
  out.close();
  return 0;
}

int cmd_run(const CommonOptions& opts, bool per_replication) {
  const ExperimentConfig config = build_config(opts);
  OracleCache cache = make_cache(opts);
  const ExperimentResult result = run_experiment(config, cache);
  Output out(opts.out);
  CsvWriter csv(out.stream());
  if (per_replication) {
    csv.row({"replication", "seed", "dist", "time_s", "dropped_denominators", "empty_neighborhoods"});
    for (std::size_t r = 0; r < result.replications.size(); ++r) {
      const Replication& rep = result.replications[r];
      csv.field(r).field(std::string_view(std::to_string(rep.seed))).field(rep.dist);
      if (opts.omit_timing) {
        csv.field(std::string_view{});
      } else {
        csv.field(rep.seconds);
      }
      csv.field(rep.diagnostics.dropped_denominators).field(rep.diagnostics.empty_neighborhoods);
      csv.end_row();
    }
  } else {
    write_sweep_header(csv);
    write_sweep_row(csv, config, result, opts.omit_timing);
  }
  out.close();
  return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::vector<std::string>& methods) {
  const ExperimentConfig base = build_config(opts);
  std::vector<SmootherKind> kinds;
  try {
    for (const auto& m : methods) kinds.push_back(parse_smoother_kind(m));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kinds.empty()) kinds.push_back(base.method);
  std::vector<std::size_t> ms = parse_counts(opts.m_values, "m");
  if (ms.empty()) ms.push_back(base.m);
  std::vector<std::size_t> sizes = parse_counts(opts.ms_values, "ms");
  if (sizes.empty()) sizes.push_back(base.subsample_size);
  const std::vector<ExperimentConfig> configs = sweep_grid(base, kinds, ms, sizes);
  OracleCache cache = make_cache(opts);
  Output out(opts.out);
  sweep(configs, cache, out.stream(), opts.omit_timing);
  out.close();
  return 0;
}

int cmd_optimal_lag(const CommonOptions& opts, const std::string& lags_text) {
  ExperimentConfig config = build_config(opts);
  config.method = SmootherKind::FixedLag;
  const std::vector<std::size_t> lags = parse_lags(lags_text);
  std::vector<std::size_t> ms = parse_counts(opts.m_values, "m");
  if (ms.empty()) ms.push_back(config.m);
  const TimeSeries series = load_or_generate(config);
  OracleCache cache = make_cache(opts);
  const auto reference = cache.get(config, series);

  Output out(opts.out);
  CsvWriter csv(out.stream());
  csv.row({"model", "m", "lag", "nsim", "dist_mean", "dist_std", "best"});
  for (std::size_t m : ms) {
    config.m = m;
    config.lag = 0;
    config.validate();
    const LagSearchResult result = optimal_lag_search(config, series, *reference, lags);
    for (const LagPoint& p : result.curve) {
      csv.field(to_string(config.model.family))
          .field(m)
          .field(p.lag)
          .field(config.nsim)
          .field(p.dist_mean)
          .field(p.dist_std)
          .field(std::string_view(p.lag == result.best_lag ? "1" : "0"));
      csv.end_row();
    }
    out.stream().flush();
  }
  out.close();
  return 0;
}

int cmd_km_table(const CommonOptions& opts, std::size_t mc_samples) {
  const ExperimentConfig config = build_config(opts);
  std::vector<std::size_t> ms = parse_counts(opts.m_values, "m");
  if (ms.empty()) ms = {100, 1000, 10000, 100000, 1000000};
  const double tau_g = config.model.tau.value_or(kDefaultGaussianScale);
  const double tau_c = config.model.tau.value_or(kDefaultCauchyScale);
  const double truncation = config.model.truncation / tau_c;

  Output out(opts.out);
  CsvWriter csv(out.stream());
  csv.row({"m", "k_gaussian", "k_gaussian_voutier", "radius_gaussian", "k_cauchy",
           "k_truncated_cauchy", "radius_truncated_cauchy"});
  for (std::size_t m : ms) {
    const auto md = static_cast<double>(m);
    const double kg = k_gaussian(md);
    const double ktc = k_truncated_cauchy(md, truncation, mc_samples);
    csv.field(m)
        .field(kg)
        .field(k_gaussian_voutier(md))
        .field(kg * tau_g)
        .field(k_cauchy(md))
        .field(ktc)
        .field(ktc * tau_c);
    csv.end_row();
  }
  out.close();
  return 0;
}

/// One line, no embedded newlines.
void report_error(const char* kind, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error: %s: %s\n", kind, flat.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle filtering and smoothing experiment harness"};
  app.require_subcommand(1);

  CommonOptions gen_opts, oracle_opts, run_opts, sweep_opts, lag_opts, km_opts;

  auto* gen = app.add_subcommand("generate-data", "write a synthetic observation series (n,y,trend)");
  add_common(*gen, gen_opts, false);

  auto* oracle = app.add_subcommand("oracle", "compute the reference smoother; writes n,mean,var");
  add_common(*oracle, oracle_opts, false);

  bool per_replication = false;
  auto* run = app.add_subcommand("run", "replicated experiment for one configuration");
  add_common(*run, run_opts, false);
  run->add_flag("--per-replication", per_replication, "one row per replication");

  std::vector<std::string> methods;
  auto* sweep_cmd = app.add_subcommand("sweep", "cross product of methods, m and ms");
  add_common(*sweep_cmd, sweep_opts, true);
  sweep_cmd->add_option("--methods", methods, "smoothers (comma separated)")->delimiter(',');

  std::string lags = "0:60";
  auto* lag = app.add_subcommand("optimal-lag", "fixed-lag Dist curve and its minimizing lag");
  add_common(*lag, lag_opts, true);
  lag->add_option("--lags", lags, "candidate lags: a:b[:step] or a,b,c");

  std::size_t mc_samples = kDefaultQuantileSamples;
  auto* km = app.add_subcommand("km-table", "tail thresholds k_m and neighborhood radii");
  add_common(*km, km_opts, true);
  km->add_option("--mc-samples", mc_samples, "Monte Carlo draws for the truncated Cauchy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*gen) return cmd_generate_data(gen_opts);
    if (*oracle) return cmd_oracle(oracle_opts);
    if (*run) return cmd_run(run_opts, per_replication);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, methods);
    if (*lag) return cmd_optimal_lag(lag_opts, lags);
    if (*km) return cmd_km_table(km_opts, mc_samples);
  } catch (const UsageError& e) {
    report_error("usage", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    report_error("invalid-argument", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return 1;
  }
  return 1;
}
