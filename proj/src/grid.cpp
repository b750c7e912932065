#include "pfsmooth/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfsmooth {

void Grid::validate() const {
  if (count < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(origin)) {
    throw std::invalid_argument("grid step must be positive and finite");
  }
}

double GridDensity::integral() const noexcept {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.step;
}

double GridDensity::mean() const noexcept {
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    weighted += values[i] * grid.point(i);
  }
  return sum > 0.0 ? weighted / sum : 0.0;
}

double GridDensity::variance() const noexcept {
  const double mu = mean();
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = grid.point(i) - mu;
    sum += values[i];
    weighted += values[i] * d * d;
  }
  return sum > 0.0 ? weighted / sum : 0.0;
}

double GridDensity::normalize() {
  const double total = integral();
  if (total > 0.0) {
    const double scale = 1.0 / total;
    for (double& v : values) v *= scale;
  }
  return total;
}

GridDensity render_normal(double mean, double var, const Grid& grid) {
  grid.validate();
  GridDensity out(grid);
  if (var <= 0.0) {
    const double pos = std::floor((mean - grid.lower_edge()) / grid.step);
    const auto cell = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(grid.count - 1)));
    out.values[cell] = 1.0 / grid.step;
    return out;
  }
  const double inv_two_var = 0.5 / var;
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double d = grid.point(i) - mean;
    out.values[i] = std::exp(-d * d * inv_two_var);
  }
  if (out.normalize() == 0.0) throw std::domain_error("normal density vanishes on the grid");
  return out;
}

}  // namespace pfsmooth
