#pragma once

#include <span>

#include "pfsmooth/model.hpp"

namespace pfsmooth::detail {

/// Evaluates rows of the transition density p(x_next | x_prev[k]) up to a
/// per-row constant factor. Gaussian rows are exponentiated relative to the
/// row maximum, so the largest entry is exactly 1; Cauchy rows are the
/// density shape 1 / (1 + z^2). Every backward smoother consumes rows only
/// through ratios in which that factor cancels.
///
/// Compiled with vectorizable math; all inputs must be finite.
class TransitionKernel {
 public:
  explicit TransitionKernel(const NoiseFamily& noise);

  /// Returns false if every entry is zero (possible only under truncation).
  bool row(double x_next, std::span<const double> x_prev, std::span<double> out) const;

 private:
  NoiseKind kind_;
  double inv_two_var_ = 0.0;
  double inv_scale_sq_ = 0.0;
  double truncation_ = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b);
/// acc += c * row
void axpy(double c, std::span<const double> row, std::span<double> acc);

}  // namespace pfsmooth::detail
