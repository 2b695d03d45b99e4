#pragma once

// Comparison estimators: the Gaussian maximum likelihood Box-Cox fit and
// Foster's minimum-distance estimator. Both profile (gamma, beta) out by
// least squares at each lambda and share the lambda grid search of the
// binomial method.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/ecdf.hpp"
#include "mpbl/error.hpp"
#include "mpbl/grid.hpp"
#include "mpbl/linalg.hpp"
#include "mpbl/normal.hpp"
#include "mpbl/numeric.hpp"
#include "mpbl/quadrature.hpp"
#include "mpbl/transform.hpp"

namespace mpbl {

// ---------------------------------------------------------------------------
// Parametric (Gaussian errors)

struct ParametricProfile {
  double value = 0.0;  // -(n/2) log(2 pi s2) - n/2 + (lambda - 1) sum log y
  LeastSquaresFit ls;
  double sigma2 = 0.0;
};

inline ParametricProfile parametric_profile(const Dataset& data, double lambda) {
  ParametricProfile out;
  out.ls = least_squares(data.x(), transformed_response(data, lambda));
  const double n = static_cast<double>(data.n());
  out.sigma2 = out.ls.rss / n;
  const double sum_log_y = data.y().array().log().sum();
  out.value = -0.5 * n * std::log(2.0 * std::numbers::pi * out.sigma2) - 0.5 * n + (lambda - 1.0) * sum_log_y;
  return out;
}

inline FitResult fit_parametric(const Dataset& data, const LambdaGrid& grid = {}) {
  std::size_t evals = 0;
  GridSearchResult gs = grid_search(grid, Sense::maximize, [&](double lambda, const ProfilePoint*) {
    ++evals;
    const ParametricProfile pp = parametric_profile(data, lambda);
    return ProfilePoint{lambda, pp.ls.slopes, pp.value};
  });
  const ParametricProfile at = parametric_profile(data, gs.best.lambda);
  FitResult fit;
  fit.method = Method::parametric;
  fit.theta_hat = Theta{gs.best.lambda, at.ls.slopes};
  fit.gamma_hat = at.ls.intercept;
  fit.objective = at.value;
  fit.sigma_hat = std::sqrt(at.sigma2);
  fit.lambda_grid_trace = std::move(gs.trace);
  fit.n_obj_evals = evals;
  return fit;
}

// ---------------------------------------------------------------------------
// Foster minimum distance
//
//   S_n = n^-1 sum_i int_0^inf { I(y_i <= t) - G(t^(lambda) - gamma - x_i'beta) }^2 dW(t)
//
// G is the unclamped empirical CDF of y_j^(lambda) - gamma - x_j'beta and W
// the normal law with the sample mean and standard deviation of y.

enum class FosterRule {
  // Integrand is piecewise constant in t; integrate each piece against W
  // in closed form.
  exact,
  gauss_legendre,
};

struct FosterQuadrature {
  FosterRule rule = FosterRule::exact;
  std::size_t n_nodes = 201;  // gauss_legendre only
  double span_sds = 6.0;      // gauss_legendre only

  void check() const {
    if (rule == FosterRule::gauss_legendre) {
      if (n_nodes < 3 || n_nodes % 2 == 0) throw ConfigError("quadrature n_nodes must be odd and >= 3");
      if (!(span_sds > 0.0)) throw ConfigError("quadrature span_sds must be positive");
    }
  }
};

struct FosterConfig {
  LambdaGrid lambda_grid;
  FosterQuadrature quad;

  void check() const {
    lambda_grid.check();
    quad.check();
  }
};

struct InterceptSlopes {
  double gamma = 0.0;
  Eigen::VectorXd beta;
};

inline InterceptSlopes foster_lse(const Dataset& data, double lambda) {
  const LeastSquaresFit ls = least_squares(data.x(), transformed_response(data, lambda));
  return {ls.intercept, ls.slopes};
}

namespace detail {

struct WeightLaw {
  double mean = 0.0;
  double sd = 1.0;
};

inline WeightLaw foster_weight(const Dataset& data) {
  std::span<const double> y(data.y().data(), data.n());
  WeightLaw w{compensated_mean(y), sample_sd(y)};
  if (!(w.sd > 0.0)) w.sd = 1.0;  // n = 1 or all y tied: any positive scale
  return w;
}

inline double foster_sn_exact(const Dataset& data, double lambda, const Eigen::VectorXd& c,
                              const std::vector<double>& e_sorted, WeightLaw w) {
  const std::size_t n = data.n();
  const double nn = static_cast<double>(n);
  std::vector<double> breaks(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = c(static_cast<Eigen::Index>(i));
    const double yi = data.y()(static_cast<Eigen::Index>(i));
    // G(t^(lambda) - c_i) = #{j : t >= breaks_j}, breaks nondecreasing.
    for (std::size_t j = 0; j < n; ++j) breaks[j] = boxcox_inverse(e_sorted[j] + ci, lambda);
    std::size_t count = 0;
    while (count < n && breaks[count] <= 0.0) ++count;
    bool indicator = false;  // y_i > 0 = left end
    double left = (0.0 - w.mean) / w.sd;
    std::size_t next = count;
    bool y_pending = true;
    CompensatedSum row;
    while (true) {
      double at = INFINITY;
      if (next < n) at = breaks[next];
      if (y_pending && yi < at) at = yi;
      const double right = std::isfinite(at) ? (at - w.mean) / w.sd : INFINITY;
      const double g = static_cast<double>(count) / nn;
      const double d = (indicator ? 1.0 : 0.0) - g;
      if (d != 0.0) row.add(d * d * normal_mass(left, right));
      if (!std::isfinite(at)) break;
      while (next < n && breaks[next] <= at) {
        ++next;
        ++count;
      }
      if (y_pending && yi <= at) {
        indicator = true;
        y_pending = false;
      }
      left = right;
    }
    total.add(row.value());
  }
  return total.value() / nn;
}

inline double foster_sn_gl(const Dataset& data, double lambda, const Eigen::VectorXd& c,
                           const std::vector<double>& e_sorted, WeightLaw w, const FosterQuadrature& q) {
  const std::size_t n = data.n();
  const double nn = static_cast<double>(n);
  const double lo = std::max(1e-12, w.mean - q.span_sds * w.sd);
  const double hi = w.mean + q.span_sds * w.sd;
  if (!(hi > lo)) return 0.0;
  const QuadratureRule rule = gauss_legendre(q.n_nodes, lo, hi);
  CompensatedSum total;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double t = rule.nodes[k];
    const double wt = rule.weights[k] * normal_pdf((t - w.mean) / w.sd) / w.sd;
    const double tl = boxcox(t, lambda);
    double node = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = tl - c(static_cast<Eigen::Index>(i));
      const auto cnt = static_cast<std::size_t>(std::upper_bound(e_sorted.begin(), e_sorted.end(), u) - e_sorted.begin());
      const double d = (data.y()(static_cast<Eigen::Index>(i)) <= t ? 1.0 : 0.0) - static_cast<double>(cnt) / nn;
      node += d * d;
    }
    total.add(wt * node);
  }
  return total.value() / nn;
}

}  // namespace detail

inline double foster_sn(const Dataset& data, double lambda, double gamma, const Eigen::VectorXd& beta,
                        const FosterConfig& config = {}) {
  config.quad.check();
  const Eigen::VectorXd c = (data.x() * beta).array() + gamma;
  std::vector<double> e(data.n());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    e[j] = boxcox(data.y()(r), lambda) - c(r);
  }
  std::sort(e.begin(), e.end());
  const detail::WeightLaw w = detail::foster_weight(data);
  if (config.quad.rule == FosterRule::exact) return detail::foster_sn_exact(data, lambda, c, e, w);
  return detail::foster_sn_gl(data, lambda, c, e, w, config.quad);
}

inline FitResult fit_foster(const Dataset& data, const FosterConfig& config = {}) {
  config.check();
  std::size_t evals = 0;
  GridSearchResult gs = grid_search(config.lambda_grid, Sense::minimize, [&](double lambda, const ProfilePoint*) {
    ++evals;
    const InterceptSlopes ls = foster_lse(data, lambda);
    return ProfilePoint{lambda, ls.beta, foster_sn(data, lambda, ls.gamma, ls.beta, config)};
  });
  const InterceptSlopes at = foster_lse(data, gs.best.lambda);
  FitResult fit;
  fit.method = Method::foster;
  fit.theta_hat = Theta{gs.best.lambda, at.beta};
  fit.gamma_hat = at.gamma;
  fit.objective = gs.best.value;
  fit.lambda_grid_trace = std::move(gs.trace);
  fit.n_obj_evals = evals;
  return fit;
}

}  // namespace mpbl
