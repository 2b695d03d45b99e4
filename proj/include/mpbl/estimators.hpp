#pragma once

#include "mpbl/baselines.hpp"
#include "mpbl/data.hpp"
#include "mpbl/optimize.hpp"

namespace mpbl {

// Settings for all three estimators. The parametric fit uses the lambda
// grid of `optim` so every method resolves lambda on the same grid.
struct EstimatorSuite {
  OptimConfig optim;
  FosterConfig foster;

  void check() const {
    optim.check();
    foster.check();
  }
};

inline FitResult fit(Method method, const Dataset& data, const EstimatorSuite& suite = {}) {
  switch (method) {
    case Method::mpbl: return fit_mpbl(data, suite.optim);
    case Method::parametric: return fit_parametric(data, suite.optim.lambda_grid);
    case Method::foster: return fit_foster(data, suite.foster);
  }
  throw ConfigError("unknown method");
}

}  // namespace mpbl
