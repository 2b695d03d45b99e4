#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "mpbl/baselines.hpp"
#include "mpbl/simgen.hpp"
#include "support.hpp"

using namespace mpbl;
using mpbl::testing::rel_err;

TEST(GaussLegendre, ExactForPolynomials) {
  const QuadratureRule r = gauss_legendre(5, -1.0, 3.0);
  double s = 0.0;
  for (std::size_t k = 0; k < 5; ++k) s += r.weights[k] * std::pow(r.nodes[k], 9);
  EXPECT_NEAR(s, (std::pow(3.0, 10) - 1.0) / 10.0, 1e-9);
  EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 4.0, 1e-13);
}

TEST(GaussLegendre, DoublingNodesOnSmoothIntegrand) {
  // Normal mass over +-6 SD, the weight law of the Foster criterion.
  auto integrate = [](std::size_t n) {
    const QuadratureRule r = gauss_legendre(n, -6.0, 6.0);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += r.weights[k] * normal_pdf(r.nodes[k]) * std::cos(r.nodes[k]);
    return s;
  };
  EXPECT_LT(rel_err(integrate(201), integrate(403)), 1e-6);
  EXPECT_NEAR(integrate(201), std::exp(-0.5), 1e-8);
}

TEST(Parametric, ProfileFormula) {
  mpbl::Philox4x32 rng(30, 1);
  const Dataset d = mpbl::testing::random_dataset(rng, 30, 2);
  const double lam = 0.35;
  const ParametricProfile pp = parametric_profile(d, lam);
  const LeastSquaresFit ls = least_squares(d.x(), transformed_response(d, lam));
  const double s2 = ls.rss / 30.0;
  const double expect =
      -15.0 * std::log(2.0 * std::numbers::pi * s2) - 15.0 + (lam - 1.0) * d.y().array().log().sum();
  EXPECT_NEAR(pp.value, expect, 1e-10 * std::abs(expect));
  EXPECT_NEAR(pp.sigma2, s2, 1e-14);
}

TEST(Parametric, OptimumDominatesGrid) {
  SimSpec spec;
  spec.n = 100;
  const Dataset d = draw_dataset(spec, 0).data;
  const FitResult f = fit_parametric(d);
  EXPECT_EQ(f.method, Method::parametric);
  ASSERT_TRUE(f.sigma_hat);
  EXPECT_NEAR(*f.sigma_hat, std::sqrt(parametric_profile(d, f.theta_hat.lambda).sigma2), 1e-14);
  for (const auto& pt : f.lambda_grid_trace) EXPECT_LE(pt.value, f.objective);
  EXPECT_EQ(f.objective, parametric_profile(d, f.theta_hat.lambda).value);
}

TEST(Parametric, NoiselessLogLinearGivesLogTransform) {
  SimSpec spec;
  spec.model_id = 1;
  spec.error_scale = 1e-4;
  spec.n = 60;
  EXPECT_NEAR(fit_parametric(draw_dataset(spec, 0).data).theta_hat.lambda, 0.0, 1e-12);
}

TEST(FosterLse, ExactLinear) {
  Eigen::MatrixXd x(5, 1);
  x << -1, 0, 1, 2, 3;
  const Dataset d = Dataset::validate((4.0 + 2.0 * x.col(0).array()).matrix(), x);  // y - 1 = 3 + 2x
  const InterceptSlopes ls = foster_lse(d, 1.0);
  EXPECT_NEAR(ls.gamma, 3.0, 1e-12);
  EXPECT_NEAR(ls.beta(0), 2.0, 1e-12);
}

TEST(FosterLse, ZeroColumnIsSingular) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
  x.col(0) << 1, 2, 3, 4, 5, 6;
  const Dataset d = Dataset::unchecked(Eigen::VectorXd::LinSpaced(6, 1.0, 3.0), x);
  EXPECT_THROW(foster_lse(d, 1.0), SingularityError);
}

TEST(FosterLse, MatchesQrAndNormalEquations) {
  mpbl::Philox4x32 rng(31, 1);
  const Dataset d = mpbl::testing::random_dataset(rng, 40, 3);
  const InterceptSlopes ls = foster_lse(d, -0.5);
  const Eigen::VectorXd z = transformed_response(d, -0.5);
  const Eigen::MatrixXd xs = with_intercept(d.x());
  const Eigen::VectorXd qr = xs.householderQr().solve(z);
  EXPECT_NEAR(ls.gamma, qr(0), 1e-10);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(ls.beta(k), qr(k + 1), 1e-10);
  Eigen::VectorXd coef(4);
  coef << ls.gamma, ls.beta;
  const Eigen::VectorXd normal = xs.transpose() * (z - xs * coef);
  EXPECT_LT(normal.cwiseAbs().maxCoeff(), 1e-8 * xs.norm() * z.norm());
}

TEST(FosterSn, SingleObservationInUnitInterval) {
  const Dataset d = Dataset::unchecked(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 0.5));
  for (FosterRule rule : {FosterRule::exact, FosterRule::gauss_legendre}) {
    FosterConfig cfg;
    cfg.quad.rule = rule;
    const double s = foster_sn(d, 0.5, 0.1, Eigen::VectorXd::Constant(1, 0.3), cfg);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(FosterSn, NonNegativeAndPermutationInvariant) {
  mpbl::Philox4x32 rng(32, 1);
  for (int k = 0; k < 10; ++k) {
    const Dataset d = mpbl::testing::random_dataset(rng, 20, 2);
    const double lam = mpbl::testing::uniform_in(rng, -1.5, 1.5);
    const InterceptSlopes ls = foster_lse(d, lam);
    const double s = foster_sn(d, lam, ls.gamma, ls.beta);
    EXPECT_GE(s, 0.0);
    std::vector<std::size_t> idx(20);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::rotate(idx.begin(), idx.begin() + 7, idx.end());
    EXPECT_LE(rel_err(foster_sn(d.rows(idx), lam, ls.gamma, ls.beta), s), 1e-9);
  }
}

TEST(FosterSn, QuadratureRulesAgree) {
  // Gauss-Legendre on a step integrand converges roughly like 1/n_nodes.
  mpbl::Philox4x32 rng(33, 1);
  for (int k = 0; k < 10; ++k) {
    const Dataset d = mpbl::testing::random_dataset(rng, 15, 2);
    const double lam = mpbl::testing::uniform_in(rng, -1.0, 1.0);
    const InterceptSlopes ls = foster_lse(d, lam);
    FosterConfig gl;
    gl.quad.rule = FosterRule::gauss_legendre;
    const double exact = foster_sn(d, lam, ls.gamma, ls.beta);
    EXPECT_NEAR(foster_sn(d, lam, ls.gamma, ls.beta, gl), exact, 1e-2 * exact + 1e-6);
    FosterConfig fine = gl;
    fine.quad.n_nodes = 2001;
    fine.quad.span_sds = 9.0;
    EXPECT_NEAR(foster_sn(d, lam, ls.gamma, ls.beta, fine), exact, 2e-3 * exact + 1e-7);
  }
}

TEST(FosterSn, ExactRuleMatchesMonteCarlo) {
  mpbl::Philox4x32 rng(34, 1);
  const Dataset d = mpbl::testing::random_dataset(rng, 12, 1);
  const double lam = 0.4;
  const InterceptSlopes ls = foster_lse(d, lam);
  const double exact = foster_sn(d, lam, ls.gamma, ls.beta);
  const Eigen::VectorXd c = (d.x() * ls.beta).array() + ls.gamma;
  std::span<const double> ys(d.y().data(), 12);
  const double m = compensated_mean(ys), s = sample_sd(ys);
  mpbl::Philox4x32 draws(35, 1);
  const int N = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < N; ++r) {
    const double t = m + s * draws.normal();
    double val = 0.0;
    if (t > 0.0) {
      for (Eigen::Index i = 0; i < 12; ++i) {
        int cnt = 0;
        for (Eigen::Index j = 0; j < 12; ++j) cnt += boxcox(d.y()(j), lam) - c(j) <= boxcox(t, lam) - c(i);
        const double diff = (d.y()(i) <= t) - cnt / 12.0;
        val += diff * diff;
      }
      val /= 12.0;
    }
    sum += val;
    sum2 += val * val;
  }
  const double mean = sum / N, se = std::sqrt((sum2 / N - mean * mean) / N);
  EXPECT_LT(std::abs(exact - mean), 4.0 * se);
}

TEST(FosterConfig, Validation) {
  FosterConfig c;
  c.quad.rule = FosterRule::gauss_legendre;
  c.quad.n_nodes = 200;
  EXPECT_THROW(c.check(), ConfigError);
  c.quad.n_nodes = 201;
  c.quad.span_sds = 0.0;
  EXPECT_THROW(c.check(), ConfigError);
}

TEST(Foster, FitMinimizesOverTrace) {
  SimSpec spec;
  spec.model_id = 3;
  spec.n = 80;
  const Dataset d = draw_dataset(spec, 0).data;
  const FitResult f = fit_foster(d);
  EXPECT_EQ(f.method, Method::foster);
  for (const auto& pt : f.lambda_grid_trace) EXPECT_GE(pt.value, f.objective);
  const InterceptSlopes ls = foster_lse(d, f.theta_hat.lambda);
  EXPECT_LE(rel_err(f.objective, foster_sn(d, f.theta_hat.lambda, ls.gamma, ls.beta)), 1e-12);
  EXPECT_EQ(f.gamma_hat, ls.gamma);
  EXPECT_NEAR(f.theta_hat.lambda, 1.0, 0.5);
}
