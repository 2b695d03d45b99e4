#pragma once

// Profile binomial likelihood
//
//   l(lambda, beta) = sum_j sum_i [ I_ij log F(q_ji) + (1 - I_ij) log(1 - F(q_ji)) ]
//
// with q_ji = y_j^(lambda) - x_i'beta, I_ij = I(y_i <= y_j) and F the clamped
// empirical CDF of the residuals at (lambda, beta). Every F value is c/n
// clamped for an integer count c, so the fast path histograms the (c, I_ij)
// pairs and takes n + 1 logarithms instead of n^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/ecdf.hpp"
#include "mpbl/numeric.hpp"
#include "mpbl/transform.hpp"

namespace mpbl {

struct LikelihoodEval {
  Theta theta;
  double log_lik = 0.0;
  std::size_t n_pairs = 0;
};

namespace detail {

inline void require_pairs(const Dataset& data) {
  if (data.n() < 2) throw DomainError("binomial likelihood needs n >= 2");
}

}  // namespace detail

// Reference implementation: every F value by a full indicator sum, O(n^3).
inline LikelihoodEval loglik_naive(const Dataset& data, const Theta& theta) {
  detail::require_pairs(data);
  const std::size_t n = data.n();
  const Eigen::VectorXd xb = data.x() * theta.beta;
  std::vector<double> a(n), v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a[k] = boxcox(data.y()(r), theta.lambda);
    v[k] = a[k] - xb(r);
  }
  const double nn = static_cast<double>(n);
  CompensatedSum total;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = a[j] - xb(static_cast<Eigen::Index>(i));
      std::size_t count = 0;
      for (std::size_t k = 0; k < n; ++k) count += v[k] <= t ? 1 : 0;
      const double f = clamp_cdf(static_cast<double>(count) / nn, n);
      const bool indicator = data.y()(static_cast<Eigen::Index>(i)) <=
                             data.y()(static_cast<Eigen::Index>(j));
      total.add(indicator ? std::log(f) : std::log1p(-f));
    }
  }
  return {theta, total.value(), n * n};
}

// l(lambda, .) for a fixed lambda, evaluated in O(n^2) per beta after one
// O(n log n) sort. Keeps scratch buffers, so one instance per thread.
//
// With rows j sorted by y, the j satisfying I_ij = 1 form a suffix of length
// R_i, and so do the j with count c_ij >= k (since y^(lambda) is increasing
// in y). Hence #{j : c_ij >= k, I_ij = 1} = min(N_i(k), R_i) where
// N_i(k) = #{j : c_ij >= k}, and a forward merge of the sorted residuals
// against the sorted y_j^(lambda) gives N_i(k) for all k.
class BinomialLikelihood {
 public:
  BinomialLikelihood(const Dataset& data, double lambda)
      : data_(&data), lambda_(lambda), n_(data.n()) {
    detail::require_pairs(data);
    const Eigen::VectorXd& y = data.y();
    a_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) a_[k] = boxcox(y(static_cast<Eigen::Index>(k)), lambda);

    std::vector<std::size_t> by_y(n_);
    std::iota(by_y.begin(), by_y.end(), std::size_t{0});
    std::stable_sort(by_y.begin(), by_y.end(), [&](std::size_t l, std::size_t r) {
      return y(static_cast<Eigen::Index>(l)) < y(static_cast<Eigen::Index>(r));
    });
    // One +inf sentinel ends every merge.
    a_by_y_.assign(n_ + 1, INFINITY);
    std::vector<double> y_sorted(n_);
    for (std::size_t m = 0; m < n_; ++m) {
      a_by_y_[m] = a_[by_y[m]];
      y_sorted[m] = y(static_cast<Eigen::Index>(by_y[m]));
    }
    monotone_ = std::is_sorted(a_by_y_.begin(), a_by_y_.begin() + static_cast<std::ptrdiff_t>(n_));
    suffix_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double yi = y(static_cast<Eigen::Index>(i));
      suffix_[i] = n_ - static_cast<std::size_t>(std::lower_bound(y_sorted.begin(), y_sorted.end(), yi) -
                                                 y_sorted.begin());
      ones_total_ += suffix_[i];
    }

    const double nn = static_cast<double>(n_);
    log_f_.resize(n_ + 1);
    log_1mf_.resize(n_ + 1);
    for (std::size_t c = 0; c <= n_; ++c) {
      const double f = clamp_cdf(static_cast<double>(c) / nn, n_);
      log_f_[c] = std::log(f);
      log_1mf_[c] = std::log1p(-f);
    }
    v_.resize(n_);
    xb_.resize(static_cast<Eigen::Index>(n_));
    at_least_.resize(n_);
    at_least_ones_.resize(n_);
  }

  double lambda() const noexcept { return lambda_; }
  std::size_t evaluations() const noexcept { return evals_; }

  double operator()(const Eigen::VectorXd& beta) {
    ++evals_;
    xb_.noalias() = data_->x() * beta;
    for (std::size_t k = 0; k < n_; ++k) v_[k] = a_[k] - xb_(static_cast<Eigen::Index>(k));
    std::sort(v_.begin(), v_.end());
    if (!monotone_) return evaluate_by_pairs();

    // at_least_[k] = #{(i, j) : c_ij >= k + 1}, at_least_ones_ the same with I_ij = 1.
    std::fill(at_least_.begin(), at_least_.end(), std::uint64_t{0});
    std::fill(at_least_ones_.begin(), at_least_ones_.end(), std::uint64_t{0});
    const double* as = a_by_y_.data();
    const double* v = v_.data();
    std::uint64_t* cnt = at_least_.data();
    std::uint64_t* ones = at_least_ones_.data();
    for (std::size_t i = 0; i < n_; ++i) {
      const double bi = xb_(static_cast<Eigen::Index>(i));
      const std::size_t ri = suffix_[i];
      std::size_t p = 0;
      for (std::size_t k = 0; k < n_; ++k) {
        const double t = v[k];
        // first j (by y) with v_k <= a_j - x_i'beta
        while (as[p] - bi < t) ++p;
        const std::size_t m = n_ - p;
        cnt[k] += m;
        ones[k] += m < ri ? m : ri;
      }
    }

    CompensatedSum total;
    std::uint64_t above = static_cast<std::uint64_t>(n_) * n_;
    std::uint64_t above_ones = ones_total_;
    for (std::size_t c = 0; c <= n_; ++c) {
      const std::uint64_t next = c < n_ ? at_least_[c] : 0;
      const std::uint64_t next_ones = c < n_ ? at_least_ones_[c] : 0;
      const std::uint64_t with_one = above_ones - next_ones;
      const std::uint64_t with_zero = (above - next) - with_one;
      if (with_one != 0) total.add(static_cast<double>(with_one) * log_f_[c]);
      if (with_zero != 0) total.add(static_cast<double>(with_zero) * log_1mf_[c]);
      above = next;
      above_ones = next_ones;
    }
    return total.value();
  }

 private:
  // Fallback when rounding breaks the monotonicity of y -> y^(lambda):
  // count each pair directly by binary search. Expects v_ sorted.
  double evaluate_by_pairs() const {
    const Eigen::VectorXd& y = data_->y();
    CompensatedSum total;
    for (std::size_t j = 0; j < n_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        const double q = a_[j] - xb_(static_cast<Eigen::Index>(i));
        const auto c = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), q) - v_.begin());
        const bool one = y(static_cast<Eigen::Index>(i)) <= y(static_cast<Eigen::Index>(j));
        total.add(one ? log_f_[c] : log_1mf_[c]);
      }
    }
    return total.value();
  }

  const Dataset* data_;
  double lambda_;
  std::size_t n_;
  std::size_t evals_ = 0;
  bool monotone_ = true;
  std::uint64_t ones_total_ = 0;
  std::vector<double> a_, a_by_y_, log_f_, log_1mf_, v_;
  std::vector<std::size_t> suffix_;
  Eigen::VectorXd xb_;
  std::vector<std::uint64_t> at_least_, at_least_ones_;
};

inline LikelihoodEval loglik_fast(const Dataset& data, const Theta& theta) {
  BinomialLikelihood lik(data, theta.lambda);
  return {theta, lik(theta.beta), data.n() * data.n()};
}

// Intercept recovered as the mean transformed residual.
inline double gamma_hat(const Dataset& data, const Theta& theta) {
  const std::vector<double> v = residuals(data, theta);
  return compensated_mean(v);
}

}  // namespace mpbl
