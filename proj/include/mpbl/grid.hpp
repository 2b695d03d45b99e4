#pragma once

// Grid search over lambda with local refinement, shared by all estimators
// so they resolve lambda identically.

#include <cmath>
#include <cstddef>
#include <vector>

#include "mpbl/data.hpp"
#include "mpbl/error.hpp"

namespace mpbl {

struct LambdaGrid {
  double lo = -2.0;
  double hi = 2.0;
  double step = 0.05;
  std::size_t refine_rounds = 2;

  void check() const {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      throw ConfigError("lambda grid needs finite lo < hi");
    if (!(step > 0.0)) throw ConfigError("lambda grid step must be positive");
  }

  double final_step() const noexcept { return step / std::pow(5.0, static_cast<double>(refine_rounds)); }
};

enum class Sense { maximize, minimize };

struct GridSearchResult {
  ProfilePoint best;
  std::vector<ProfilePoint> trace;  // evaluation order
};

// eval(lambda, warm) -> ProfilePoint; warm is the previously evaluated point
// of the scan (nullptr at the very first one). Points with a non-finite
// value are skipped.
//
// Coarse pass: lo + k * step. Each refinement round divides the step by 5
// and scans the open window incumbent +- previous step (8 new points) in
// ascending order. The incumbent changes only on a strict improvement, or an equal value at a
// smaller lambda.
template <class Eval>
GridSearchResult grid_search(const LambdaGrid& grid, Sense sense, Eval&& eval) {
  grid.check();
  GridSearchResult out;
  ProfilePoint warm;
  bool have_warm = false;
  bool have_best = false;
  auto better = [&](const ProfilePoint& a, const ProfilePoint& b) {
    if (a.value == b.value) return a.lambda < b.lambda;
    return sense == Sense::maximize ? a.value > b.value : a.value < b.value;
  };
  auto visit = [&](double lambda) {
    ProfilePoint pt = eval(lambda, have_warm ? &warm : nullptr);
    pt.lambda = lambda;
    if (std::isfinite(pt.value)) {
      warm = pt;
      have_warm = true;
      if (!have_best || better(pt, out.best)) {
        out.best = pt;
        have_best = true;
      }
    }
    out.trace.push_back(std::move(pt));
  };

  const auto k_max = static_cast<long>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9));
  for (long k = 0; k <= k_max; ++k) visit(grid.lo + static_cast<double>(k) * grid.step);
  if (!have_best) throw OptimizationError("criterion is non-finite at every coarse lambda grid point");

  double step = grid.step;
  for (std::size_t round = 0; round < grid.refine_rounds; ++round) {
    const double fine = step / 5.0;
    const double center = out.best.lambda;
    warm = out.best;
    for (int k = -4; k <= 4; ++k) {
      if (k == 0) continue;
      const double lambda = center + k * fine;
      if (lambda < grid.lo - 1e-12 || lambda > grid.hi + 1e-12) continue;
      visit(lambda);
    }
    step = fine;
  }
  return out;
}

}  // namespace mpbl
