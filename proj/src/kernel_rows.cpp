// Built with -fno-math-errno -funsafe-math-optimizations -ffinite-math-only so
// that the exp and reduction loops vectorize. Results are deterministic for a
// given build; nothing here may see an infinity or NaN.
#include "kernel_rows.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace pfsmooth::detail {

TransitionKernel::TransitionKernel(const NoiseFamily& noise) : kind_(noise.kind()) {
  const double s = noise.scale();
  if (!(s > 0.0)) throw std::invalid_argument("backward smoothing needs a positive noise scale");
  inv_two_var_ = 0.5 / (s * s);
  inv_scale_sq_ = 1.0 / (s * s);
  if (auto t = noise.truncation()) truncation_ = *t;
}

bool TransitionKernel::row(double x_next, std::span<const double> x_prev,
                           std::span<double> out) const {
  const std::size_t n = x_prev.size();
  const double* __restrict x = x_prev.data();
  double* __restrict y = out.data();
  switch (kind_) {
    case NoiseKind::Gaussian: {
      double min_sq = 0.0;
      if (n > 0) {
        const double d0 = x_next - x[0];
        min_sq = d0 * d0;
      }
#pragma omp simd reduction(min : min_sq)
      for (std::size_t k = 0; k < n; ++k) {
        const double d = x_next - x[k];
        y[k] = d * d;
        min_sq = y[k] < min_sq ? y[k] : min_sq;
      }
      const double a = inv_two_var_;
#pragma omp simd
      for (std::size_t k = 0; k < n; ++k) y[k] = std::exp(-(y[k] - min_sq) * a);
      return n > 0;
    }
    case NoiseKind::Cauchy: {
      const double a = inv_scale_sq_;
#pragma omp simd
      for (std::size_t k = 0; k < n; ++k) {
        const double d = x_next - x[k];
        y[k] = 1.0 / (1.0 + d * d * a);
      }
      return n > 0;
    }
    case NoiseKind::TruncatedCauchy: {
      const double a = inv_scale_sq_;
      const double t = truncation_;
      int any = 0;
#pragma omp simd reduction(| : any)
      for (std::size_t k = 0; k < n; ++k) {
        const double d = x_next - x[k];
        const bool inside = std::fabs(d) <= t;
        y[k] = inside ? 1.0 / (1.0 + d * d * a) : 0.0;
        any |= inside ? 1 : 0;
      }
      return any != 0;
    }
  }
  return false;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t k = 0; k < n; ++k) acc += pa[k] * pb[k];
  return acc;
}

void axpy(double c, std::span<const double> row, std::span<double> acc) {
  const std::size_t n = row.size();
  const double* __restrict r = row.data();
  double* __restrict y = acc.data();
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) y[k] += c * r[k];
}

}  // namespace pfsmooth::detail
