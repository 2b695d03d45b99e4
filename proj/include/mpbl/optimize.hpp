#pragma once

// Maximum profile binomial likelihood fit:
//   1. for fixed lambda, beta_lambda = argmax_beta l(lambda, beta) by
//      Nelder-Mead from least-squares and rank-based starts,
//   2. lambda_hat by grid search on pl(lambda) = l(lambda, beta_lambda),
//   3. beta_hat = beta_{lambda_hat}, gamma_hat = mean residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/error.hpp"
#include "mpbl/grid.hpp"
#include "mpbl/likelihood.hpp"
#include "mpbl/linalg.hpp"
#include "mpbl/nelder_mead.hpp"

namespace mpbl {

struct InitStrategies {
  bool ols = true;
  bool rank = true;
  // Continue from beta at the previously scanned lambda.
  bool warm_start = true;
};

struct OptimConfig {
  LambdaGrid lambda_grid;
  NelderMeadConfig nm;
  // Extra Nelder-Mead runs restarted from each start's optimum.
  std::size_t restarts = 0;
  InitStrategies init;

  void check() const {
    lambda_grid.check();
    if (!init.ols && !init.rank) throw ConfigError("at least one of the ols/rank starts must be enabled");
    if (!(nm.xtol > 0.0) || !(nm.ftol >= 0.0)) throw ConfigError("Nelder-Mead tolerances must be positive");
  }
};

// Slopes of the OLS regression of y^(lambda) on [1, X]; the intercept is
// dropped because the error distribution absorbs it.
inline Eigen::VectorXd ols_init(const Dataset& data, double lambda) {
  return least_squares(data.x(), transformed_response(data, lambda)).slopes;
}

// Jaeckel's dispersion with Wilcoxon scores, sum_i a(R(e_i)) e_i,
// a(k) = sqrt(12) (k / (n + 1) - 1/2). Ties are ranked by row order.
class RankDispersion {
 public:
  RankDispersion(const Dataset& data, double lambda)
      : data_(&data), z_(transformed_response(data, lambda)), e_(data.n()), order_(data.n()) {
    const double n1 = static_cast<double>(data.n() + 1);
    scores_.resize(data.n());
    for (std::size_t k = 0; k < data.n(); ++k)
      scores_[k] = std::sqrt(12.0) * (static_cast<double>(k + 1) / n1 - 0.5);
  }

  double operator()(const Eigen::VectorXd& beta) {
    const Eigen::VectorXd xb = data_->x() * beta;
    for (std::size_t i = 0; i < e_.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      e_[i] = z_(r) - xb(r);
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t l, std::size_t r) { return e_[l] < e_[r]; });
    CompensatedSum d;
    for (std::size_t k = 0; k < order_.size(); ++k) d.add(scores_[k] * e_[order_[k]]);
    return d.value();
  }

 private:
  const Dataset* data_;
  Eigen::VectorXd z_;
  std::vector<double> e_, scores_;
  std::vector<std::size_t> order_;
};

inline Eigen::VectorXd rank_init(const Dataset& data, double lambda, const OptimConfig& config,
                                 const Eigen::VectorXd* ols_start = nullptr) {
  const Eigen::VectorXd start = ols_start ? *ols_start : ols_init(data, lambda);
  RankDispersion disp(data, lambda);
  return nelder_mead(disp, start, config.nm).x;
}

// Outcome of the inner maximization at one lambda, with the start values
// kept for the ascent check.
struct BetaSearch {
  ProfilePoint point;
  bool converged = false;
  std::size_t evaluations = 0;
  std::vector<double> start_values;
};

inline BetaSearch beta_given_lambda(const Dataset& data, double lambda, const OptimConfig& config,
                                    const Eigen::VectorXd* warm = nullptr) {
  std::vector<Eigen::VectorXd> starts;
  const Eigen::VectorXd ols = ols_init(data, lambda);
  if (config.init.ols) starts.push_back(ols);
  if (config.init.rank) starts.push_back(rank_init(data, lambda, config, &ols));
  if (config.init.warm_start && warm != nullptr && warm->size() == ols.size()) starts.push_back(*warm);

  BinomialLikelihood lik(data, lambda);
  auto neg = [&](const Eigen::VectorXd& b) { return -lik(b); };
  BetaSearch out;
  out.point.lambda = lambda;
  out.point.value = -INFINITY;
  bool found = false;
  for (const auto& s : starts) {
    NelderMeadResult r = nelder_mead(neg, s, config.nm);
    out.start_values.push_back(-r.f_start);
    for (std::size_t k = 0; k < config.restarts && std::isfinite(r.f); ++k) {
      NelderMeadResult again = nelder_mead(neg, r.x, config.nm);
      again.f_start = r.f_start;
      if (again.f <= r.f) r = std::move(again);
    }
    if (std::isfinite(r.f) && (!found || -r.f > out.point.value)) {
      out.point.beta = r.x;
      out.point.value = -r.f;
      out.converged = r.converged;
      found = true;
    }
  }
  out.evaluations = lik.evaluations();
  if (!found)
    throw OptimizationError("binomial likelihood non-finite from every start at lambda = " +
                            std::to_string(lambda));
  return out;
}

inline FitResult fit_mpbl(const Dataset& data, const OptimConfig& config = {}) {
  config.check();
  std::size_t evals = 0;
  // Convergence of the point that ends up as the optimum.
  std::vector<std::pair<double, bool>> conv;
  GridSearchResult gs = grid_search(config.lambda_grid, Sense::maximize,
                                    [&](double lambda, const ProfilePoint* warm) {
                                      BetaSearch s = beta_given_lambda(data, lambda, config,
                                                                       warm ? &warm->beta : nullptr);
                                      evals += s.evaluations;
                                      conv.emplace_back(lambda, s.converged);
                                      return s.point;
                                    });
  FitResult fit;
  fit.method = Method::mpbl;
  fit.theta_hat = Theta{gs.best.lambda, gs.best.beta};
  fit.gamma_hat = gamma_hat(data, fit.theta_hat);
  fit.objective = gs.best.value;
  fit.lambda_grid_trace = std::move(gs.trace);
  fit.n_obj_evals = evals;
  for (const auto& [l, c] : conv)
    if (l == gs.best.lambda) fit.converged = c;
  return fit;
}

}  // namespace mpbl
