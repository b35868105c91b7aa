#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rawlsgcn {

// Caller supplied malformed or inconsistent input (bad shape, index out of
// range, missing file, empty mask).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Matrix has an all-zero row or column where a scaling needs a positive sum.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

// Sinkhorn-Knopp did not reach the requested tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double max_deviation,
                      std::size_t iterations)
      : std::runtime_error(what),
        max_deviation_(max_deviation),
        iterations_(iterations) {}

  double max_deviation() const noexcept { return max_deviation_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double max_deviation_;
  std::size_t iterations_;
};

}  // namespace rawlsgcn
