#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "pfsmooth/grid.hpp"
#include "pfsmooth/model.hpp"
#include "pfsmooth/smoothers.hpp"

namespace pfsmooth {

struct ModelConfig {
  NoiseKind family = NoiseKind::Gaussian;
  std::optional<double> tau;  // family default when absent
  double sigma = kDefaultObsStd;
  double truncation = kDefaultTruncation;
  double initial_mean = 0.0;
  double initial_std = 1.0;

  double scale() const;
  TrendModel build() const;
};

struct DataConfig {
  std::optional<std::filesystem::path> path;  // otherwise the synthetic generator
  std::size_t length = 500;
  std::uint64_t seed = 1;
};

enum class ReferenceKind { Auto, Kalman, Grid };

std::string_view to_string(ReferenceKind kind);
ReferenceKind parse_reference_kind(std::string_view text);

struct ExperimentConfig {
  ModelConfig model;
  SmootherKind method = SmootherKind::FFBSm;
  std::size_t m = 1000;
  std::size_t subsample_size = 0;  // S-FFBSm m_s / NS-FFBSm m_small
  std::size_t lag = 0;             // fixed-lag only
  double alpha = 0.5;
  double epsilon = 0.0;            // 0 selects 1/m
  SubsampleStrategy strategy = SubsampleStrategy::EquallySpaced;
  std::size_t nsim = 20;
  std::uint64_t master_seed = 1;
  Grid grid;
  DataConfig data;
  ReferenceKind reference = ReferenceKind::Auto;
  unsigned threads = 1;

  /// Checks ranges and method/parameter compatibility.
  void validate() const;
};

/// Flat key=value settings; '#' starts a comment line.
using Settings = std::map<std::string, std::string, std::less<>>;

Settings parse_settings(std::string_view text);
Settings load_settings(const std::filesystem::path& path);

/// Applies one setting. Keys match the CLI long flags without dashes
/// (model, tau, sigma, truncation, method, m, ms, lag, alpha, eps, nsim,
/// seed, data, N, data-seed, reference, strategy, threads, grid-origin,
/// grid-step, grid-count, initial-mean, initial-std).
/// Throws std::invalid_argument for unknown keys or malformed values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
void apply_settings(ExperimentConfig& config, const Settings& settings);

SubsampleStrategy parse_strategy(std::string_view text);
std::string_view to_string(SubsampleStrategy strategy);

}  // namespace pfsmooth
