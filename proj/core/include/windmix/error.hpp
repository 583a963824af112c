// Exception types shared across the library.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace windmix {

// Base class for recoverable failures raised by windmix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record; line is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An iterative solver exhausted its budget; carries the last iterate so the
// caller can inspect how far it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> last_iterate,
                   double residual)
      : Error(msg),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}
  const std::vector<double>& last_iterate() const noexcept {
    return last_iterate_;
  }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

// Estimation restarted more often than the configured budget allows.
class RestartLimitError : public Error {
 public:
  RestartLimitError(const std::string& msg, int restarts)
      : Error(msg), restarts_(restarts) {}
  int restarts() const noexcept { return restarts_; }

 private:
  int restarts_;
};

// A class lost all of its (soft and hard) mass during an update.
class DegenerateClassError : public Error {
 public:
  explicit DegenerateClassError(const std::string& msg, std::size_t class_index)
      : Error(msg), class_index_(class_index) {}
  std::size_t class_index() const noexcept { return class_index_; }

 private:
  std::size_t class_index_;
};

// A moment-inversion target falls outside the attainable range.
class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& msg, double attainable_lo,
                  double attainable_hi)
      : Error(msg), lo_(attainable_lo), hi_(attainable_hi) {}
  double attainable_lo() const noexcept { return lo_; }
  double attainable_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// Raised when a bimodal fit is requested but no antimode exists.
class UnimodalError : public Error {
 public:
  using Error::Error;
};

}  // namespace windmix
