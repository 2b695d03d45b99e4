#pragma once

// Box-Cox power transform y^(lambda) = (y^lambda - 1) / lambda, with the
// log y limit at lambda = 0, and the lambda-derivative of the residual map
// V = y^(lambda) - x'beta.

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "mpbl/error.hpp"

namespace mpbl {

// Below this |lambda| the analytic lambda = 0 branch is used.
inline constexpr double kLambdaSwitch = 1e-8;

namespace detail {

inline void require_positive(double y) {
  if (!(y > 0.0)) {
    std::ostringstream os;
    os << "Box-Cox transform requires y > 0, got " << y;
    throw DomainError(os.str());
  }
}

}  // namespace detail

// Transform given log y; the caller guarantees y > 0.
inline double boxcox_from_log(double log_y, double lambda) noexcept {
  if (std::abs(lambda) <= kLambdaSwitch) return log_y;
  // expm1 keeps (y^lambda - 1) accurate when lambda * log y is small.
  return std::expm1(lambda * log_y) / lambda;
}

inline double boxcox(double y, double lambda) {
  detail::require_positive(y);
  return boxcox_from_log(std::log(y), lambda);
}

// Inverse map u -> t with t^(lambda) = u. Returns 0 when u lies below the
// range of the transform and +inf when it lies above.
inline double boxcox_inverse(double u, double lambda) noexcept {
  if (std::abs(lambda) <= kLambdaSwitch) return std::exp(u);
  const double base = 1.0 + lambda * u;
  if (base <= 0.0) return lambda > 0.0 ? 0.0 : INFINITY;
  return std::exp(std::log1p(lambda * u) / lambda);
}

// d/dlambda of y^(lambda).
inline double boxcox_dlambda(double y, double lambda) {
  detail::require_positive(y);
  const double ly = std::log(y);
  if (std::abs(lambda) <= kLambdaSwitch) return 0.5 * ly * ly;
  const double z = lambda * ly;
  if (std::abs(z) < 0.05) {
    // z e^z - expm1(z) = sum_{k>=2} (k-1) z^k / k!; the closed form cancels badly here.
    const double s =
        0.5 + z * (1.0 / 3 + z * (1.0 / 8 + z * (1.0 / 30 + z * (1.0 / 144 + z * (1.0 / 840 + z / 5760)))));
    return ly * ly * s;
  }
  return (z * std::exp(z) - std::expm1(z)) / (lambda * lambda);
}

// Gradient of V_theta = y^(lambda) - x'beta with respect to (lambda, beta).
inline Eigen::VectorXd vdot(double y, const Eigen::Ref<const Eigen::VectorXd>& x,
                            double lambda) {
  Eigen::VectorXd out(x.size() + 1);
  out(0) = boxcox_dlambda(y, lambda);
  out.tail(x.size()) = -x;
  return out;
}

}  // namespace mpbl
