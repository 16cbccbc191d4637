#include <gtest/gtest.h>

#include <cmath>

#include "plurigreen/blowup/blowup.hpp"
#include "plurigreen/core/hessian.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace plurigreen;
using plurigreen::testing::Rng;

namespace {

CVector<2> chart_point(Rng& rng, double zeta, double theta_lo, double theta_hi)
{
  return CVector<2>(rng.complex_in_disc(zeta), std::polar(rng.uniform(theta_lo, theta_hi), rng.uniform(0.0, 6.283)));
}

}  // namespace

TEST(BlowupChart, TransitionRoundTripAndProjection)
{
  Rng rng(401);
  const CVector<2> a(0.2, cplx(0.0, -0.1));
  const BlowupChart<2> c0(0, 0, a), c1(0, 1, a);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector<2> c = chart_point(rng, 0.8, 0.5, 2.0);
    const CVector<2> d = chart_transition<2>(c0, c1, c);
    EXPECT_LT((chart_transition<2>(c1, c0, d) - c).norm(), 1e-12);
    EXPECT_LT((c1.project(d) - c0.project(c)).norm(), 1e-12);
  }
  EXPECT_THROW(chart_transition<2>(c0, c1, CVector<2>(0.3, 0.0)), PivotDegenerate);
}

TEST(BlowupChart, JacobianDeterminantMatchesFiniteDifferences)
{
  Rng rng(402);
  const BlowupChart<2> ch(0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const CVector<2> c = chart_point(rng, 1.0, 0.0, 2.0);
    const double fd = oracle::fd_real_jacobian_det<2>([&](const CVector<2>& x) { return ch.project(x); }, c);
    EXPECT_NEAR(fd, std::norm(ch.jacobian(c).determinant()), 1e-6);
    EXPECT_NEAR(fd, std::norm(c(0)), 1e-6);
  }
}

TEST(BlowupChart, ProjectionIsHolomorphic)
{
  const BlowupChart<2> ch(0, 1);
  const CVector<2> c(cplx(0.3, 0.1), cplx(-1.0, 0.5));
  EXPECT_LT(cauchy_riemann_residual<2>([&](const CVector<2>& x) { return ch.project(x); }, c), 1e-8);
  EXPECT_GT(cauchy_riemann_residual<2>([](const CVector<2>& x) { return CVector<2>(x.conjugate()); }, c), 0.5);
  EXPECT_THROW(BlowupChart<2>(0, 2), InvalidInput);
  EXPECT_THROW(BlowupChart<2>(2, 0), InvalidInput);
}

TEST(BlowupChart, CurveBlowupLeavesTangentialCoordinate)
{
  const BlowupChart<2> ch(1, 0, CVector<2>(0.5, 0.0));
  const CVector<2> c(0.25, 3.0);
  const CVector<2> z = ch.project(c);
  EXPECT_EQ(z(0), cplx(0.75));
  EXPECT_EQ(z(1), cplx(3.0));
}

TEST(ExceptionalMetric, SectionNormNearE)
{
  ExceptionalMetric<2> g;
  const auto ch = g.chart(0);
  Rng rng(403);
  for (int trial = 0; trial < 40; ++trial) {
    const CVector<2> c = chart_point(rng, 0.1, 0.0, 1.5);
    if (std::abs(c(0)) * std::sqrt(1.0 + std::norm(c(1))) >= 0.5) continue;
    const double expect = 1.0 / (1.0 + std::norm(c(1)));
    EXPECT_NEAR((h_E_norm<2>(g, ch, [](const CVector<2>& x) { return x(0); }, c)), expect, 1e-12);
    EXPECT_NEAR((h_E_norm<2>(g, ch, [](const CVector<2>& x) { return cplx(2.0, -1.0) * x(0); }, c)), 5.0 * expect, 1e-11);
  }
  const CVector<2> on_E(0.0, cplx(0.0, 0.0));
  EXPECT_NEAR((h_E_norm<2>(g, ch, [](const CVector<2>& x) { return x(0); }, on_E)), 1.0, 1e-9);
  const CVector<2> on_E2(0.0, cplx(1.0, 1.0));
  EXPECT_NEAR((h_E_norm<2>(g, ch, [](const CVector<2>& x) { return x(0); }, on_E2)), 1.0 / 3.0, 1e-9);
  EXPECT_THROW((h_E_norm<2>(g, ch, [](const CVector<2>&) { return cplx(1.0); }, on_E)), NotASection);
}

TEST(ExceptionalMetric, CurvatureMatchesFiniteDifferences)
{
  ExceptionalMetric<2> g;
  const auto ch = g.chart(1);
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const CVector<2> c = chart_point(rng, 0.9, 0.0, 1.5);
    const auto fd = fd_complex_hessian<2>([&](const CVector<2>& x) { return exceptional_potential<2>(g, ch, x); }, c, 1e-4);
    EXPECT_LT((exceptional_curvature<2>(g, ch, c) - fd).norm(), 1e-5 * (1.0 + fd.norm()));
  }
}

TEST(ExceptionalMetric, FubiniStudyBlockOnE)
{
  ExceptionalMetric<2> g;
  const auto ch = g.chart(0);
  EXPECT_NEAR(exceptional_curvature<2>(g, ch, CVector<2>::Zero())(1, 1).real(), 1.0, 1e-8);
  for (double t : {0.5, 1.0, 2.0}) {
    const CVector<2> c(0.0, t);
    EXPECT_NEAR(exceptional_curvature<2>(g, ch, c)(1, 1).real(), 1.0 / std::pow(1.0 + t * t, 2), 1e-8);
    EXPECT_NEAR(fubini_study_block<2>(g, ch, c)(0, 0).real(), 1.0 / std::pow(1.0 + t * t, 2), 1e-12);
  }
}

TEST(LambdaThreshold, ScalarExamples)
{
  auto m = [](double v) { return Eigen::MatrixXcd::Constant(1, 1, v); };
  EXPECT_EQ(lambda_threshold(m(1), m(1), m(1), m(0)), 0.0);
  EXPECT_NEAR(lambda_threshold(m(1), m(-2), m(1), m(0)), 2.0, 4e-6);
  // λ + x > |y|²/d
  EXPECT_NEAR(lambda_threshold(m(2), m(-1), m(0.5), m(1.5)), (1.5 * 1.5 / 0.5 + 1.0) / 2.0, 1e-5);
  EXPECT_THROW(lambda_threshold(m(-1), m(1), m(1), m(0)), HypothesisViolated);
  EXPECT_THROW(lambda_threshold(m(1), m(1), m(0), m(0)), HypothesisViolated);
  EXPECT_THROW(lambda_threshold(m(1), Eigen::MatrixXcd::Identity(2, 2), m(1), m(0)), InvalidInput);
}

TEST(LambdaThreshold, MatchesDenseScanOnRandomInstances)
{
  Rng rng(405);
  for (int trial = 0; trial < 40; ++trial) {
    const int a = rng.integer(1, 4), b = rng.integer(1, 4);
    Eigen::VectorXd sa(a), sd(b);
    for (int k = 0; k < a; ++k) sa(k) = rng.uniform(0.2, 2.0);
    for (int k = 0; k < b; ++k) sd(k) = rng.uniform(0.2, 2.0);
    const auto A = plurigreen::testing::hermitian_with_spectrum(rng, sa);
    const auto D = plurigreen::testing::hermitian_with_spectrum(rng, sd);
    const auto X = plurigreen::testing::random_hermitian(rng, a);
    const auto Y = plurigreen::testing::random_matrix(rng, a, b);
    double step = 0.0;
    const double scan = oracle::lambda_scan(A, X, D, Y, step);
    const double got = lambda_threshold(A, X, D, Y);
    EXPECT_NEAR(got, scan, step + 1e-6 * std::max(1.0, scan));
    Eigen::MatrixXcd M(a + b, a + b);
    M << (got + 1.0) * A + X, Y, Y.adjoint(), D;
    EXPECT_GT(oracle::eigen_min(M), 0.0);
  }
}

TEST(LambdaThreshold, NonIncreasingWhenXGrows)
{
  Rng rng(406);
  for (int trial = 0; trial < 40; ++trial) {
    const int a = rng.integer(1, 3), b = rng.integer(1, 3);
    const Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(a, a), D = Eigen::MatrixXcd::Identity(b, b);
    const auto X = plurigreen::testing::random_hermitian(rng, a);
    const auto Y = plurigreen::testing::random_matrix(rng, a, b);
    const auto B = plurigreen::testing::random_matrix(rng, a, a);
    const Eigen::MatrixXcd P = B * B.adjoint();
    const double l0 = lambda_threshold(A, X, D, Y), l1 = lambda_threshold(A, Eigen::MatrixXcd(X + P), D, Y);
    EXPECT_LE(l1, l0 * (1.0 + 2e-6) + 1e-12);
  }
}

TEST(Positivity, PointBlowupThreshold)
{
  ExceptionalMetric<2> g;
  const auto R = positivity_threshold<2>(g, flat_form<2>(), SampleBox{1.0, 2.0, 9});
  EXPECT_GT(R.epsilon_K, 0.0);
  EXPECT_GT(R.witness_min, 0.0);
  EXPECT_GT(R.on_E_samples, 0u);
  EXPECT_LT(R.d_block_deviation, 1e-8);
  EXPECT_GT(R.d_block_min, 0.0);
  EXPECT_NEAR(R.pullback_min_on_E, 0.0, 1e-12);
}

TEST(Positivity, ThresholdShrinksAsTheBoxGrows)
{
  ExceptionalMetric<2> g;
  const double small = positivity_threshold<2>(g, flat_form<2>(), SampleBox{0.5, 1.0, 5}).epsilon_K;
  const double large = positivity_threshold<2>(g, flat_form<2>(), SampleBox{1.0, 2.0, 9}).epsilon_K;
  EXPECT_LE(large, small + 1e-12);
}

TEST(Iterated, CertifiesBothStages)
{
  IteratedBlowup it(ExceptionalMetric<2>{}, SampleBox{1.0, 2.0, 7}, SecondStage{CVector<2>(0.0, 0.5), CutoffProfile(0.25, 0.5), SampleBox{0.5, 2.0, 7}});
  const auto R = it.certify();
  EXPECT_GT(R.n1, 0);
  EXPECT_GT(R.n2, 0);
  EXPECT_GT(R.combined_min, 0.0);
  EXPECT_DOUBLE_EQ(R.epsilon2, 1.0 / (R.n1 * R.n2));
  EXPECT_THROW(IteratedBlowup(ExceptionalMetric<2>{}, SampleBox{}, SecondStage{CVector<2>(0.1, 0.5)}), InvalidInput);
}

TEST(Iterated, TrivialSecondStage)
{
  IteratedBlowup it(ExceptionalMetric<2>{}, SampleBox{1.0, 2.0, 7}, std::nullopt);
  const auto R = it.certify();
  EXPECT_EQ(R.n2, 1);
  EXPECT_EQ(R.epsilon2, R.epsilon1);
  EXPECT_EQ(R.combined_min, R.stage1_min);
}

TEST(Iterated, LogProductEqualsLogSum)
{
  IteratedBlowup it(ExceptionalMetric<2>{}, SampleBox{1.0, 2.0, 5}, SecondStage{CVector<2>(0.0, 0.5)});
  Rng rng(407);
  for (int trial = 0; trial < 50; ++trial) {
    const CVector<2> u = chart_point(rng, 0.4, 0.1, 1.5);
    for (int p = 0; p < 2; ++p) {
      const auto ch2 = it.second().chart(p);
      for (int n2 : {1, 2, 4}) {
        const double a = it.log_product_metric(ch2, u, n2), b = it.log_sum_metric(ch2, u, n2);
        EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(b)));
      }
    }
  }
}
