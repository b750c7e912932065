#include "pfsmooth/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pfsmooth {

namespace {

std::string_view trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

double ModelConfig::scale() const {
  if (tau) return *tau;
  return family == NoiseKind::Gaussian ? kDefaultGaussianScale : kDefaultCauchyScale;
}

TrendModel ModelConfig::build() const {
  switch (family) {
    case NoiseKind::Gaussian:
      return TrendModel(NoiseFamily::gaussian(scale()), sigma, initial_mean, initial_std);
    case NoiseKind::Cauchy:
      return TrendModel(NoiseFamily::cauchy(scale()), sigma, initial_mean, initial_std);
    case NoiseKind::TruncatedCauchy:
      return TrendModel(NoiseFamily::truncated_cauchy(scale(), truncation), sigma, initial_mean,
                        initial_std);
  }
  throw std::invalid_argument("unknown model family");
}

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::Auto: return "auto";
    case ReferenceKind::Kalman: return "kalman";
    case ReferenceKind::Grid: return "grid";
  }
  return "unknown";
}

ReferenceKind parse_reference_kind(std::string_view text) {
  if (text == "auto") return ReferenceKind::Auto;
  if (text == "kalman") return ReferenceKind::Kalman;
  if (text == "grid") return ReferenceKind::Grid;
  throw std::invalid_argument("unknown reference '" + std::string(text) + "'");
}

SubsampleStrategy parse_strategy(std::string_view text) {
  if (text == "equally-spaced") return SubsampleStrategy::EquallySpaced;
  if (text == "stratified") return SubsampleStrategy::StratifiedRandom;
  if (text == "weight-stratified") return SubsampleStrategy::WeightStratified;
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(SubsampleStrategy strategy) {
  switch (strategy) {
    case SubsampleStrategy::EquallySpaced: return "equally-spaced";
    case SubsampleStrategy::StratifiedRandom: return "stratified";
    case SubsampleStrategy::WeightStratified: return "weight-stratified";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  grid.validate();
  if (m < 2) throw std::invalid_argument("m must be at least 2");
  if (nsim < 1) throw std::invalid_argument("nsim must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("eps must lie in [0, 1)");
  if (lag > 0 && method != SmootherKind::FixedLag) {
    throw std::invalid_argument("lag applies only to fixed-lag");
  }
  const bool subsampled = method == SmootherKind::SFFBSm || method == SmootherKind::NSFFBSm;
  if (subsampled && subsample_size == 0) {
    throw std::invalid_argument(std::string(to_string(method)) + " requires ms >= 1");
  }
  if (!subsampled && subsample_size != 0) {
    throw std::invalid_argument("ms applies only to s-ffbsm and ns-ffbsm");
  }
  if (method == SmootherKind::SFFBSm) {
    if (subsample_size > m) throw std::invalid_argument("ms must not exceed m");
    if (strategy != SubsampleStrategy::WeightStratified && m % subsample_size != 0) {
      throw std::invalid_argument("ms must divide m for " + std::string(to_string(strategy)));
    }
  }
  if (data.length == 0 && !data.path) throw std::invalid_argument("N must be positive");
}

Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_settings(buffer.str());
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  if (key == "model") {
    config.model.family = parse_noise_kind(value);
  } else if (key == "tau") {
    config.model.tau = parse_number<double>(key, value);
  } else if (key == "sigma") {
    config.model.sigma = parse_number<double>(key, value);
  } else if (key == "truncation") {
    config.model.truncation = parse_number<double>(key, value);
  } else if (key == "initial-mean") {
    config.model.initial_mean = parse_number<double>(key, value);
  } else if (key == "initial-std") {
    config.model.initial_std = parse_number<double>(key, value);
  } else if (key == "method") {
    config.method = parse_smoother_kind(value);
  } else if (key == "m") {
    config.m = parse_number<std::size_t>(key, value);
  } else if (key == "ms") {
    config.subsample_size = parse_number<std::size_t>(key, value);
  } else if (key == "lag") {
    config.lag = parse_number<std::size_t>(key, value);
  } else if (key == "alpha") {
    config.alpha = parse_number<double>(key, value);
  } else if (key == "eps") {
    config.epsilon = parse_number<double>(key, value);
  } else if (key == "strategy") {
    config.strategy = parse_strategy(value);
  } else if (key == "nsim") {
    config.nsim = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    config.master_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "data") {
    config.data.path = std::filesystem::path(value);
  } else if (key == "N") {
    config.data.length = parse_number<std::size_t>(key, value);
  } else if (key == "data-seed") {
    config.data.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "reference") {
    config.reference = parse_reference_kind(value);
  } else if (key == "threads") {
    config.threads = parse_number<unsigned>(key, value);
  } else if (key == "grid-origin") {
    config.grid.origin = parse_number<double>(key, value);
  } else if (key == "grid-step") {
    config.grid.step = parse_number<double>(key, value);
  } else if (key == "grid-count") {
    config.grid.count = parse_number<std::size_t>(key, value);
  } else {
    throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
  }
}

void apply_settings(ExperimentConfig& config, const Settings& settings) {
  for (const auto& [key, value] : settings) apply_setting(config, key, value);
}

}  // namespace pfsmooth
