#pragma once

// Dataset, parameter and fit-result types shared by every estimator.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/error.hpp"

namespace mpbl {

// Response y (strictly positive) and covariates x (n x p, no intercept
// column). Immutable once built.
class Dataset {
 public:
  // Checks every invariant and throws ValidationError listing all violations.
  static Dataset validate(Eigen::VectorXd y, Eigen::MatrixXd x);

  // Skips validation. Only for low-level numerical routines that are
  // meaningful on degenerate inputs (tiny n, constant columns).
  static Dataset unchecked(Eigen::VectorXd y, Eigen::MatrixXd x) {
    return Dataset(std::move(y), std::move(x));
  }

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  // Rows picked by index, with repetition (bootstrap resampling).
  Dataset rows(const std::vector<std::size_t>& idx) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), x_.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(idx[k]);
      y(static_cast<Eigen::Index>(k)) = y_(r);
      x.row(static_cast<Eigen::Index>(k)) = x_.row(r);
    }
    return Dataset(std::move(y), std::move(x));
  }

 private:
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x) : y_(std::move(y)), x_(std::move(x)) {}

  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
};

inline Dataset Dataset::validate(Eigen::VectorXd y, Eigen::MatrixXd x) {
  std::vector<Violation> bad;
  if (y.size() != x.rows()) {
    bad.push_back({-1, "dimension mismatch: " + std::to_string(y.size()) + " responses vs " +
                           std::to_string(x.rows()) + " covariate rows"});
    throw ValidationError(std::move(bad));
  }
  const auto n = y.size();
  const auto p = x.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y(i)))
      bad.push_back({i, "non-finite response"});
    else if (y(i) <= 0.0)
      bad.push_back({i, "non-positive response"});
    for (Eigen::Index c = 0; c < p; ++c) {
      if (!std::isfinite(x(i, c))) {
        bad.push_back({i, "non-finite covariate in column " + std::to_string(c)});
        break;
      }
    }
  }
  if (n < p + 2) {
    bad.push_back({-1, "need n >= p + 2, got n = " + std::to_string(n) +
                           ", p = " + std::to_string(p)});
  }
  for (Eigen::Index c = 0; c < p && n > 0; ++c) {
    const bool constant = (x.col(c).array() == x(0, c)).all();
    if (constant) {
      // The intercept lives in the error distribution; a constant column
      // would leave the binomial likelihood flat along its coefficient.
      bad.push_back({-1, "covariate column " + std::to_string(c) +
                             " is constant; the intercept is absorbed into the error "
                             "distribution, so do not supply an intercept column"});
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return Dataset(std::move(y), std::move(x));
}

struct Theta {
  double lambda = 1.0;
  Eigen::VectorXd beta;

  bool finite() const noexcept { return std::isfinite(lambda) && beta.allFinite(); }
};

enum class Method { mpbl, parametric, foster };

inline std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::mpbl: return "mpbl";
    case Method::parametric: return "parametric";
    case Method::foster: return "foster";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) noexcept {
  if (s == "mpbl") return Method::mpbl;
  if (s == "parametric") return Method::parametric;
  if (s == "foster") return Method::foster;
  return std::nullopt;
}

// One evaluated lambda on the profile: the inner optimum beta at that
// lambda and the criterion value there.
struct ProfilePoint {
  double lambda = 0.0;
  Eigen::VectorXd beta;
  double value = 0.0;
};

struct FitResult {
  Method method = Method::mpbl;
  Theta theta_hat;
  double gamma_hat = 0.0;
  // Criterion at theta_hat: l for mpbl, profile log-likelihood for
  // parametric, S_n for foster.
  double objective = 0.0;
  std::vector<ProfilePoint> lambda_grid_trace;
  bool converged = true;
  std::size_t n_obj_evals = 0;
  std::optional<double> sigma_hat;  // parametric only
};

}  // namespace mpbl
