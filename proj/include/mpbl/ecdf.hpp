#pragma once

// Empirical CDF of the transformed residuals V_i = y_i^(lambda) - x_i'beta,
// with the [1/n^2, 1 - 1/n^2] clamp used inside the binomial likelihood.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/transform.hpp"

namespace mpbl {

// V_i = y_i^(lambda) - x_i'beta in row order.
inline std::vector<double> residuals(const Dataset& data, const Theta& theta) {
  const Eigen::VectorXd xb = data.x() * theta.beta;
  std::vector<double> v(data.n());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    v[i] = boxcox(data.y()(r), theta.lambda) - xb(r);
  }
  return v;
}

class EcdfIndex {
 public:
  static EcdfIndex from_values(std::vector<double> v) {
    std::stable_sort(v.begin(), v.end());
    return EcdfIndex(std::move(v));
  }

  std::span<const double> sorted_values() const noexcept { return sorted_; }
  std::size_t n() const noexcept { return sorted_.size(); }

  // Number of values <= t (position one past the rightmost value <= t).
  std::size_t count_le(double t) const noexcept {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin());
  }

 private:
  explicit EcdfIndex(std::vector<double> sorted) : sorted_(std::move(sorted)) {}

  std::vector<double> sorted_;
};

inline EcdfIndex build_index(const Dataset& data, const Theta& theta) {
  return EcdfIndex::from_values(residuals(data, theta));
}

inline double g_hat(const EcdfIndex& index, double t) noexcept {
  if (index.n() == 0) return 0.0;
  return static_cast<double>(index.count_le(t)) / static_cast<double>(index.n());
}

// {G(t) v n^-2} ^ (1 - n^-2)
inline double clamp_cdf(double g, std::size_t n) noexcept {
  const double nn = static_cast<double>(n);
  const double floor = 1.0 / (nn * nn);
  return std::min(std::max(g, floor), 1.0 - floor);
}

inline double f_hat(const EcdfIndex& index, double t) noexcept {
  return clamp_cdf(g_hat(index, t), index.n());
}

}  // namespace mpbl
