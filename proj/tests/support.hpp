#pragma once

// Random instances shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/random.hpp"

namespace mpbl::testing {

inline double uniform_in(Philox4x32& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// y = exp(N(0.5, 0.7^2) + 0.3 * x1), x ~ N(0, 1); validated.
inline Dataset random_dataset(Philox4x32& rng, std::size_t n, std::size_t p) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = rng.normal();
    y(i) = std::exp(0.5 + 0.7 * rng.normal() + 0.3 * x(i, 0));
  }
  return Dataset::validate(std::move(y), std::move(x));
}

inline Theta random_theta(Philox4x32& rng, std::size_t p) {
  Theta t;
  t.lambda = uniform_in(rng, -1.5, 1.5);
  t.beta = Eigen::VectorXd(static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < t.beta.size(); ++k) t.beta(k) = 0.5 * rng.normal();
  return t;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace mpbl::testing
