#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpbl {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside a function's mathematical domain (e.g. y <= 0 for Box-Cox).
class DomainError : public Error {
 public:
  using Error::Error;
};

struct Violation {
  std::ptrdiff_t row;  // -1 when the violation is not tied to a row
  std::string reason;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string msg = "invalid dataset:";
    const std::size_t shown = v.size() < 5 ? v.size() : 5;
    for (std::size_t k = 0; k < shown; ++k) {
      msg += " [";
      if (v[k].row >= 0) msg += "row " + std::to_string(v[k].row) + ": ";
      msg += v[k].reason + "]";
    }
    if (v.size() > shown) msg += " (+" + std::to_string(v.size() - shown) + " more)";
    return msg;
  }

  std::vector<Violation> violations_;
};

// Design matrix is rank deficient or too badly conditioned to solve.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double condition)
      : Error(what + " (condition number " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpbl
