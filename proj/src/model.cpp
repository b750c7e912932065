#include "pfsmooth/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pfsmooth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::string trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gauss";
    case NoiseKind::Cauchy: return "cauchy";
    case NoiseKind::TruncatedCauchy: return "tcauchy";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "gauss" || text == "gaussian") return NoiseKind::Gaussian;
  if (text == "cauchy") return NoiseKind::Cauchy;
  if (text == "tcauchy" || text == "truncated-cauchy") return NoiseKind::TruncatedCauchy;
  throw std::invalid_argument("unknown model '" + std::string(text) + "'");
}

NoiseFamily::NoiseFamily(NoiseKind kind, double scale, std::optional<double> truncation)
    : kind_(kind), scale_(scale), truncation_(truncation), log_norm_(0.0), trunc_mass_(1.0) {
  if (!std::isfinite(scale) || scale < 0.0 || (scale == 0.0 && kind != NoiseKind::Gaussian)) {
    throw std::invalid_argument("noise scale must be positive");
  }
  if (truncation_.has_value() != (kind == NoiseKind::TruncatedCauchy)) {
    throw std::invalid_argument("truncation is required exactly for the truncated Cauchy");
  }
  switch (kind) {
    case NoiseKind::Gaussian:
      log_norm_ = scale > 0.0 ? -std::log(scale) - kLogSqrt2Pi : 0.0;
      break;
    case NoiseKind::Cauchy:
      log_norm_ = -std::log(std::numbers::pi * scale);
      break;
    case NoiseKind::TruncatedCauchy:
      if (!(*truncation_ > 0.0)) throw std::invalid_argument("truncation must be positive");
      trunc_mass_ = 2.0 * std::atan(*truncation_ / scale) / std::numbers::pi;
      log_norm_ = -std::log(std::numbers::pi * scale) - std::log(trunc_mass_);
      break;
  }
}

NoiseFamily NoiseFamily::gaussian(double scale) { return {NoiseKind::Gaussian, scale, std::nullopt}; }
NoiseFamily NoiseFamily::cauchy(double scale) { return {NoiseKind::Cauchy, scale, std::nullopt}; }
NoiseFamily NoiseFamily::truncated_cauchy(double scale, double truncation) {
  return {NoiseKind::TruncatedCauchy, scale, truncation};
}

double NoiseFamily::log_density(double v) const noexcept {
  switch (kind_) {
    case NoiseKind::Gaussian: {
      if (scale_ == 0.0) return v == 0.0 ? std::numeric_limits<double>::infinity() : kNegInf;
      const double z = v / scale_;
      return log_norm_ - 0.5 * z * z;
    }
    case NoiseKind::Cauchy: {
      const double z = v / scale_;
      return log_norm_ - std::log1p(z * z);
    }
    case NoiseKind::TruncatedCauchy: {
      if (std::abs(v) > *truncation_) return kNegInf;
      const double z = v / scale_;
      return log_norm_ - std::log1p(z * z);
    }
  }
  return kNegInf;
}

double NoiseFamily::cdf(double v) const noexcept {
  switch (kind_) {
    case NoiseKind::Gaussian:
      if (scale_ == 0.0) return v >= 0.0 ? 1.0 : 0.0;
      return 0.5 * std::erfc(-v / (scale_ * std::numbers::sqrt2));
    case NoiseKind::Cauchy:
      return 0.5 + std::atan(v / scale_) / std::numbers::pi;
    case NoiseKind::TruncatedCauchy: {
      const double t = *truncation_;
      const double clamped = std::clamp(v, -t, t);
      return 0.5 + std::atan(clamped / scale_) / (std::numbers::pi * trunc_mass_);
    }
  }
  return 0.0;
}

double NoiseFamily::sample(Rng& rng) const {
  switch (kind_) {
    case NoiseKind::Gaussian: {
      if (scale_ == 0.0) return 0.0;
      std::normal_distribution<double> normal(0.0, scale_);
      return normal(rng);
    }
    case NoiseKind::Cauchy: {
      std::cauchy_distribution<double> cauchy(0.0, scale_);
      return cauchy(rng);
    }
    case NoiseKind::TruncatedCauchy: {
      std::cauchy_distribution<double> cauchy(0.0, scale_);
      for (;;) {
        const double v = cauchy(rng);
        if (std::abs(v) <= *truncation_) return v;
      }
    }
  }
  return 0.0;
}

TrendModel::TrendModel(NoiseFamily system_noise, double obs_std, double initial_mean,
                       double initial_std)
    : noise_(system_noise),
      obs_std_(obs_std),
      initial_mean_(initial_mean),
      initial_std_(initial_std),
      obs_log_norm_(obs_std > 0.0 ? -std::log(obs_std) - kLogSqrt2Pi : 0.0) {
  if (!std::isfinite(obs_std) || obs_std < 0.0) {
    throw std::invalid_argument("observation noise std must be positive");
  }
  if (!std::isfinite(initial_std) || initial_std <= 0.0) {
    throw std::invalid_argument("initial std must be positive");
  }
  if (!std::isfinite(initial_mean)) throw std::invalid_argument("initial mean must be finite");
}

double TrendModel::observation_logdensity(double x, double y) const noexcept {
  if (obs_std_ == 0.0) return x == y ? std::numeric_limits<double>::infinity() : kNegInf;
  const double z = (y - x) / obs_std_;
  return obs_log_norm_ - 0.5 * z * z;
}

double TrendModel::sample_initial(Rng& rng) const {
  std::normal_distribution<double> normal(initial_mean_, initial_std_);
  return normal(rng);
}

TrendModel default_model(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian:
      return TrendModel(NoiseFamily::gaussian(kDefaultGaussianScale), kDefaultObsStd);
    case NoiseKind::Cauchy:
      return TrendModel(NoiseFamily::cauchy(kDefaultCauchyScale), kDefaultObsStd);
    case NoiseKind::TruncatedCauchy:
      return TrendModel(NoiseFamily::truncated_cauchy(kDefaultCauchyScale, kDefaultTruncation),
                        kDefaultObsStd);
  }
  throw std::invalid_argument("unknown noise kind");
}

TimeSeries parse_time_series(std::string_view text) {
  TimeSeries series;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    double value = 0.0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
      throw std::invalid_argument("bad observation on line " + std::to_string(line_no) + ": '" +
                                  line + "'");
    }
    series.values.push_back(value);
  }
  return series;
}

TimeSeries load_time_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open data file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  TimeSeries series = parse_time_series(buffer.str());
  if (series.empty()) throw std::runtime_error("data file " + path.string() + " has no values");
  return series;
}

void save_time_series(const TimeSeries& series, const std::filesystem::path& path,
                      std::string_view header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  char buf[64];
  for (double v : series.values) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
}

LevelSchedule default_schedule() {
  return {{1, 100, 0.0}, {101, 250, 1.0}, {251, 400, -1.0}, {401, 500, 0.0}};
}

GeneratedSeries generate_test_series(const TrendModel& model, const LevelSchedule& schedule,
                                     std::size_t length, std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("series length must be positive");
  LevelSchedule sorted = schedule;
  std::ranges::sort(sorted, {}, &LevelSegment::first);
  std::size_t next = 1;
  for (const auto& segment : sorted) {
    if (segment.last < segment.first) throw std::invalid_argument("empty schedule segment");
    if (segment.first != next) {
      throw std::invalid_argument("trend schedule gap or overlap at n=" + std::to_string(next));
    }
    next = segment.last + 1;
  }
  if (next <= length) {
    throw std::invalid_argument("trend schedule gap at n=" + std::to_string(next));
  }

  GeneratedSeries out;
  out.trend.reserve(length);
  out.series.values.reserve(length);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto segment = sorted.begin();
  for (std::size_t n = 1; n <= length; ++n) {
    while (segment->last < n) ++segment;
    out.trend.push_back(segment->level);
    const double w = model.obs_std() * noise(rng);
    out.series.values.push_back(segment->level + w);
  }
  return out;
}

}  // namespace pfsmooth
