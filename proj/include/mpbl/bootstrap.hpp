#pragma once

// Pairs (case) bootstrap: resample rows with replacement, refit, and
// summarize each parameter by its bootstrap SD and percentile interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpbl/data.hpp"
#include "mpbl/error.hpp"
#include "mpbl/estimators.hpp"
#include "mpbl/numeric.hpp"
#include "mpbl/parallel.hpp"
#include "mpbl/random.hpp"

namespace mpbl {

inline constexpr std::uint64_t kBootstrapDomain = 0xB007'5742'0000'0001ULL;

struct BootstrapResult {
  FitResult point;
  std::vector<std::string> parameters;  // "lambda", "beta1", ...
  std::vector<double> bsd;
  std::vector<std::pair<double, double>> bci;
  double level = 0.95;
  std::size_t b = 0;         // successful replicates
  std::size_t failures = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> replicates;  // successful replicates, replicate order
};

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile_type7(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline std::vector<std::string> parameter_names(std::size_t p) {
  std::vector<std::string> names{"lambda"};
  for (std::size_t k = 1; k <= p; ++k) names.push_back("beta" + std::to_string(k));
  return names;
}

inline std::vector<double> parameter_vector(const FitResult& fit) {
  std::vector<double> v{fit.theta_hat.lambda};
  for (Eigen::Index k = 0; k < fit.theta_hat.beta.size(); ++k) v.push_back(fit.theta_hat.beta(k));
  return v;
}

inline std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t replicate) {
  Philox4x32 rng = Philox4x32::substream(seed, kBootstrapDomain, replicate);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

// Interval endpoints from the stored replicates at another level.
inline std::pair<double, double> percentile_interval(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const double alpha = 0.5 * (1.0 - level);
  return {quantile_type7(values, alpha), quantile_type7(values, 1.0 - alpha)};
}

// estimator: const Dataset& -> FitResult. Replicates whose resampled design
// is invalid or singular, or whose fit fails, count as failures; more than
// 5% failures is an error.
template <class Estimator>
BootstrapResult bootstrap_fit(const Dataset& data, Estimator&& estimator, std::size_t b, std::uint64_t seed,
                              std::size_t threads = 1, double level = 0.95) {
  if (b < 2) throw ConfigError("bootstrap needs b >= 2 replicates");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
  BootstrapResult out;
  out.point = estimator(data);
  out.parameters = parameter_names(data.p());
  out.level = level;
  out.seed = seed;

  std::vector<std::optional<std::vector<double>>> reps(b);
  parallel_for(b, threads, [&](std::size_t r) {
    const Dataset resampled = data.rows(resample_indices(data.n(), seed, r));
    try {
      const Dataset checked = Dataset::validate(resampled.y(), resampled.x());
      reps[r] = parameter_vector(estimator(checked));
    } catch (const ValidationError&) {
    } catch (const SingularityError&) {
    } catch (const OptimizationError&) {
    }
  });

  for (auto& r : reps) {
    if (r)
      out.replicates.push_back(std::move(*r));
    else
      ++out.failures;
  }
  out.b = out.replicates.size();
  if (static_cast<double>(out.failures) > 0.05 * static_cast<double>(b))
    throw Error("bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(b) +
                " replicates failed (limit 5%)");
  if (out.b < 2) throw Error("bootstrap: fewer than two successful replicates");

  const std::size_t k = out.parameters.size();
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> col(out.b);
    for (std::size_t r = 0; r < out.b; ++r) col[r] = out.replicates[r][j];
    out.bsd.push_back(sample_sd(col));
    out.bci.push_back(percentile_interval(std::move(col), level));
  }
  return out;
}

inline BootstrapResult bootstrap_fit(const Dataset& data, Method method, const EstimatorSuite& suite,
                                     std::size_t b, std::uint64_t seed, std::size_t threads = 1,
                                     double level = 0.95) {
  suite.check();
  return bootstrap_fit(
      data, [&](const Dataset& d) { return fit(method, d, suite); }, b, seed, threads, level);
}

}  // namespace mpbl
