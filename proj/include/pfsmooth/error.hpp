#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pfsmooth {

/// Raised when a recursion loses all probability mass (weights or grid
/// densities underflow to zero). Carries the 1-based time index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t time_index)
      : std::runtime_error(what + " at n=" + std::to_string(time_index)),
        time_index_(time_index) {}

  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

class SingularInnovation : public std::runtime_error {
 public:
  explicit SingularInnovation(std::size_t time_index)
      : std::runtime_error("singular innovation variance at n=" + std::to_string(time_index)),
        time_index_(time_index) {}

  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

}  // namespace pfsmooth
