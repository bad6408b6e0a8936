#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Power iteration gave up; the best Rayleigh quotient seen is kept.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace bcd
