#pragma once

// Simulation designs and the Monte Carlo bias/MSE driver.
//
// Covariates: S1, S2 independent bivariate normals, unit variances,
// correlation 0.6; X1 = -log{1 - Phi(S11)}, X2 = I(S21 > 0),
// X3 = -log{1 - Phi(S12)}, X4 = I(S22 > 0).
//
//   Model 1  log Y = X1 + X2 + e                      lambda =  0
//   Model 2  log Y = X1 + X2 + X3 + X4 + e            lambda =  0
//   Model 3      Y = 4 + 2.5 (X1 + X2) + e            lambda =  1
//   Model 4      Y = 4 + 1.2 (X1 + ... + X4) + e      lambda =  1
//   Model 5    5/Y = 4 + 2.5 (X1 + X2) + e            lambda = -1
//   Model 6    5/Y = 4 + 1.2 (X1 + ... + X4) + e      lambda = -1
//
// On the Box-Cox scale Models 5-6 read Y^(-1) = 1 - 1/Y = 0.2 - 0.2 (...),
// so their true slopes are -0.5 and -0.24.

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/error.hpp"
#include "mpbl/estimators.hpp"
#include "mpbl/normal.hpp"
#include "mpbl/numeric.hpp"
#include "mpbl/parallel.hpp"
#include "mpbl/random.hpp"

namespace mpbl {

enum class ErrorDist {
  normal,  // scale * N(0, 1)
  chisq,   // scale * (chi^2_1 - 1)
};

inline std::string_view to_string(ErrorDist d) noexcept { return d == ErrorDist::normal ? "normal" : "chisq"; }

struct SimSpec {
  int model_id = 1;
  ErrorDist error_dist = ErrorDist::normal;
  double error_scale = 0.5;
  std::size_t n = 100;
  std::size_t reps = 200;
  std::uint64_t seed = 20240101;

  void check() const {
    if (model_id < 1 || model_id > 6) throw ConfigError("model_id must be in 1..6");
    if (n < 10) throw ConfigError("simulation n must be >= 10");
    if (reps < 1) throw ConfigError("simulation reps must be >= 1");
    if (!(error_scale > 0.0) || !std::isfinite(error_scale)) throw ConfigError("error_scale must be positive");
  }

  std::size_t p() const noexcept { return model_id % 2 == 1 ? 2 : 4; }
};

struct TrueParams {
  double lambda = 0.0;
  Eigen::VectorXd beta;
};

inline TrueParams true_params(int model_id) {
  switch (model_id) {
    case 1: return {0.0, Eigen::VectorXd::Constant(2, 1.0)};
    case 2: return {0.0, Eigen::VectorXd::Constant(4, 1.0)};
    case 3: return {1.0, Eigen::VectorXd::Constant(2, 2.5)};
    case 4: return {1.0, Eigen::VectorXd::Constant(4, 1.2)};
    case 5: return {-1.0, Eigen::VectorXd::Constant(2, -0.5)};
    case 6: return {-1.0, Eigen::VectorXd::Constant(4, -0.24)};
    default: throw ConfigError("model_id must be in 1..6");
  }
}

// MSE multiplier used by the published tables.
inline double mse_scale(int model_id) noexcept { return model_id <= 4 ? 100.0 : 1000.0; }

inline std::array<double, 4> gen_covariate_row(Philox4x32& rng) {
  const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal(), z4 = rng.normal();
  const double s11 = z1, s12 = 0.6 * z1 + 0.8 * z2;
  const double s21 = z3, s22 = 0.6 * z3 + 0.8 * z4;
  return {-std::log(normal_sf(s11)), s21 > 0.0 ? 1.0 : 0.0, -std::log(normal_sf(s12)), s22 > 0.0 ? 1.0 : 0.0};
}

inline Eigen::MatrixXd gen_covariates(std::size_t n, Philox4x32& rng) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = gen_covariate_row(rng);
    for (Eigen::Index c = 0; c < 4; ++c) x(i, c) = row[static_cast<std::size_t>(c)];
  }
  return x;
}

inline double gen_error(ErrorDist dist, double scale, Philox4x32& rng) {
  const double z = rng.normal();
  return dist == ErrorDist::normal ? scale * z : scale * (z * z - 1.0);
}

// Response for covariates (X1, X2[, X3, X4]) and error. May be non-positive
// or non-finite for extreme errors; callers redraw such rows.
inline double gen_response(int model_id, std::span<const double> x, double eps) {
  const double s2 = x[0] + x[1];
  auto s4 = [&] { return x[0] + x[1] + x[2] + x[3]; };
  switch (model_id) {
    case 1: return std::exp(s2 + eps);
    case 2: return std::exp(s4() + eps);
    case 3: return 4.0 + 2.5 * s2 + eps;
    case 4: return 4.0 + 1.2 * s4() + eps;
    case 5: return 5.0 / (4.0 + 2.5 * s2 + eps);
    case 6: return 5.0 / (4.0 + 1.2 * s4() + eps);
    default: throw ConfigError("model_id must be in 1..6");
  }
}

struct SimDraw {
  Dataset data;
  std::size_t redraws = 0;
};

inline constexpr std::size_t kMaxConsecutiveRedraws = 1000;

inline std::uint64_t cell_code(const SimSpec& spec) noexcept {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(spec.model_id));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(spec.error_dist) + 0x100));
  h = splitmix64(h ^ static_cast<std::uint64_t>(spec.n));
  return splitmix64(h ^ std::bit_cast<std::uint64_t>(spec.error_scale));
}

// Dataset of repetition `rep`, from its own substream of (seed, cell).
inline SimDraw draw_dataset(const SimSpec& spec, std::size_t rep) {
  spec.check();
  Philox4x32 rng = Philox4x32::substream(spec.seed, cell_code(spec), rep);
  const Eigen::Index n = static_cast<Eigen::Index>(spec.n);
  const Eigen::Index p = static_cast<Eigen::Index>(spec.p());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  std::size_t redraws = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > kMaxConsecutiveRedraws)
        throw Error("simulation: more than 1000 consecutive redraws of a non-positive response (model " +
                    std::to_string(spec.model_id) + ")");
      const auto row = gen_covariate_row(rng);
      const double eps = gen_error(spec.error_dist, spec.error_scale, rng);
      const double yi = gen_response(spec.model_id, row, eps);
      if (yi > 0.0 && std::isfinite(yi)) {
        y(i) = yi;
        for (Eigen::Index c = 0; c < p; ++c) x(i, c) = row[static_cast<std::size_t>(c)];
        break;
      }
      ++redraws;
    }
  }
  return {Dataset::validate(std::move(y), std::move(x)), redraws};
}

struct ParameterSummary {
  std::string parameter;
  double bias = 0.0;
  double mse_scaled = 0.0;
};

struct MethodSummary {
  Method method = Method::mpbl;
  std::vector<ParameterSummary> parameters;
  std::vector<std::vector<double>> estimates;  // rep x (lambda, beta...)
};

struct McSummary {
  SimSpec spec;
  double mse_scale = 100.0;
  std::vector<MethodSummary> methods;
  std::size_t reps_done = 0;
  std::size_t redraws = 0;
  double wall_seconds = 0.0;
};

inline McSummary summarize_estimates(const SimSpec& spec, std::vector<MethodSummary> methods) {
  McSummary out;
  out.spec = spec;
  out.mse_scale = mse_scale(spec.model_id);
  const TrueParams truth = true_params(spec.model_id);
  std::vector<double> target{truth.lambda};
  for (Eigen::Index k = 0; k < truth.beta.size(); ++k) target.push_back(truth.beta(k));
  const std::vector<std::string> names = [&] {
    std::vector<std::string> v{"lambda"};
    for (std::size_t k = 1; k <= spec.p(); ++k) v.push_back("beta" + std::to_string(k));
    return v;
  }();
  for (auto& m : methods) {
    m.parameters.clear();
    const auto reps = static_cast<double>(m.estimates.size());
    for (std::size_t j = 0; j < target.size(); ++j) {
      CompensatedSum err, sq;
      for (const auto& e : m.estimates) {
        const double d = e[j] - target[j];
        err.add(d);
        sq.add(d * d);
      }
      m.parameters.push_back({names[j], err.value() / reps, out.mse_scale * sq.value() / reps});
    }
    out.reps_done = m.estimates.size();
  }
  out.methods = std::move(methods);
  return out;
}

// Fits every requested method on each repetition's dataset (shared across
// methods) and aggregates bias and scaled MSE in repetition order.
inline McSummary run_cell(const SimSpec& spec, const std::vector<Method>& methods,
                          const EstimatorSuite& suite = {}, std::size_t threads = 1) {
  spec.check();
  suite.check();
  if (methods.empty()) throw ConfigError("run_cell needs at least one method");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<std::vector<double>>> est(methods.size(), std::vector<std::vector<double>>(spec.reps));
  std::vector<std::size_t> redraws(spec.reps, 0);
  parallel_for(spec.reps, threads, [&](std::size_t rep) {
    try {
      const SimDraw draw = draw_dataset(spec, rep);
      redraws[rep] = draw.redraws;
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const FitResult f = fit(methods[m], draw.data, suite);
        std::vector<double> v{f.theta_hat.lambda};
        for (Eigen::Index k = 0; k < f.theta_hat.beta.size(); ++k) v.push_back(f.theta_hat.beta(k));
        est[m][rep] = std::move(v);
      }
    } catch (const std::exception& e) {
      throw Error("simulation cell (model " + std::to_string(spec.model_id) + ", " +
                  std::string(to_string(spec.error_dist)) + ", n " + std::to_string(spec.n) + ") failed at rep " +
                  std::to_string(rep) + " with seed " + std::to_string(spec.seed) + ": " + e.what());
    }
  });
  std::vector<MethodSummary> ms(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    ms[m].method = methods[m];
    ms[m].estimates = std::move(est[m]);
  }
  McSummary out = summarize_estimates(spec, std::move(ms));
  for (std::size_t r : redraws) out.redraws += r;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace mpbl
