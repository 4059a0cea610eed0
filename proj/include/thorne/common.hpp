// Shared error types and small numeric helpers used across the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace thorne {

/// Raised when an input violates a documented precondition (bad parameter,
/// malformed configuration).  Maps to CLI exit status 1.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when supplied data cannot be used (empty, degenerate, unparseable).
/// Maps to CLI exit status 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative numerical procedure fails to converge or
/// overflows its representable range.  Maps to CLI exit status 3.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt_two_pi = 2.50662827463100050242;
inline constexpr double inv_sqrt_two_pi = 0.39894228040143267794;

/// Standard normal density.
inline double normal_pdf(double z) {
  return inv_sqrt_two_pi * std::exp(-0.5 * z * z);
}

/// Standard normal CDF via the complementary error function.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

inline bool nearly_equal(double a, double b, double rel, double abs_floor = 0.0) {
  const double scale = std::max({std::fabs(a), std::fabs(b), abs_floor});
  return std::fabs(a - b) <= rel * scale;
}

}  // namespace thorne
