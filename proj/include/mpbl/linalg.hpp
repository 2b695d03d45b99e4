#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "mpbl/data.hpp"
#include "mpbl/error.hpp"
#include "mpbl/transform.hpp"

namespace mpbl {

inline constexpr double kMaxCondition = 1e12;

struct LeastSquaresFit {
  double intercept = 0.0;
  Eigen::VectorXd slopes;
  double rss = 0.0;
};

// [1, X]
inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xs(x.rows(), x.cols() + 1);
  xs.col(0).setOnes();
  xs.rightCols(x.cols()) = x;
  return xs;
}

// OLS of z on [1, X] through the normal equations. Throws SingularityError
// when the condition number of X*'X* exceeds kMaxCondition.
inline LeastSquaresFit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& z) {
  const Eigen::MatrixXd xs = with_intercept(x);
  const Eigen::MatrixXd gram = xs.transpose() * xs;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : INFINITY;
  if (!(cond <= kMaxCondition)) throw SingularityError("least squares design is singular", cond);
  const Eigen::VectorXd coef = gram.ldlt().solve(xs.transpose() * z);
  LeastSquaresFit out;
  out.intercept = coef(0);
  out.slopes = coef.tail(x.cols());
  out.rss = (z - xs * coef).squaredNorm();
  return out;
}

inline Eigen::VectorXd transformed_response(const Dataset& data, double lambda) {
  Eigen::VectorXd z(data.y().size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = boxcox(data.y()(i), lambda);
  return z;
}

}  // namespace mpbl
