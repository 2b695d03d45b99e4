#pragma once

// Nelder-Mead downhill simplex minimizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace mpbl {

struct NelderMeadConfig {
  std::size_t max_iters = 0;  // 0 means 500 * dim
  double xtol = 1e-6;
  double ftol = 1e-8;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double f_start = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Minimizes f from x0. The initial simplex offsets each coordinate by
// 0.1 * max|x0| (0.1 when x0 = 0). Converges when the spread of simplex
// values drops below ftol * (|f_best| + ftol) or the simplex diameter,
// measured from the best vertex in the max norm, drops below xtol.
template <class F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const NelderMeadConfig& cfg) {
  const Eigen::Index dim = x0.size();
  const std::size_t max_iters = cfg.max_iters ? cfg.max_iters : 500 * static_cast<std::size_t>(std::max<Eigen::Index>(dim, 1));
  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : INFINITY;
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(dim) + 1, x0);
  std::vector<double> vals(pts.size());
  vals[0] = eval(x0);
  res.f_start = vals[0];
  if (dim == 0) {
    res.x = x0;
    res.f = vals[0];
    res.converged = true;
    return res;
  }
  double step = 0.1 * x0.cwiseAbs().maxCoeff();
  if (step == 0.0) step = 0.1;
  for (Eigen::Index k = 0; k < dim; ++k) {
    pts[static_cast<std::size_t>(k) + 1](k) += step;
    vals[static_cast<std::size_t>(k) + 1] = eval(pts[static_cast<std::size_t>(k) + 1]);
  }

  std::vector<std::size_t> ord(pts.size());
  Eigen::VectorXd centroid(dim), xr(dim), xe(dim), xc(dim);
  while (true) {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t l, std::size_t r) { return vals[l] < vals[r]; });
    const std::size_t best = ord.front(), worst = ord.back(), second = ord[ord.size() - 2];

    const double spread = vals[worst] - vals[best];
    double diameter = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k)
      diameter = std::max(diameter, (pts[k] - pts[best]).cwiseAbs().maxCoeff());
    if ((std::isfinite(vals[best]) && spread <= cfg.ftol * (std::abs(vals[best]) + cfg.ftol)) ||
        diameter < cfg.xtol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iters) break;
    ++res.iterations;

    centroid.setZero();
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(dim);

    xr = centroid + cfg.reflection * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      xe = centroid + cfg.expansion * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflected point beats the worst vertex.
    const bool outside = fr < vals[worst];
    xc = outside ? Eigen::VectorXd(centroid + cfg.contraction * (xr - centroid))
                 : Eigen::VectorXd(centroid + cfg.contraction * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + cfg.shrink * (pts[k] - pts[best]);
      vals[k] = eval(pts[k]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(it - vals.begin());
  res.x = pts[idx];
  res.f = vals[idx];
  return res;
}

}  // namespace mpbl
