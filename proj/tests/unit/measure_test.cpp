#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plurigreen/measure/ma_measure.hpp"
#include "support/generators.hpp"

using namespace plurigreen;

namespace {

const DomainSpec disk256{DomainKind::disk, 1, {1.0}, {}, 256};
const DomainSpec ball32{DomainKind::ball, 2, {1.0}, {}, 32};

template <int N, class F>
ComplexGrid<N> sampled(const DomainSpec& d, F&& f)
{
  ComplexGrid<N> g(d);
  g.fill(f);
  return g;
}

}  // namespace

TEST(MaDensity, QuadraticExamples)
{
  const auto u = sampled<2>(ball32, [](const CVector<2>& z) { return 2.0 * std::norm(z(0)) + 3.0 * std::norm(z(1)); });
  const auto rho = ma_density<2>(u);
  const auto p = plurigreen::testing::nearest_node<2>(u, CVector<2>::Zero());
  EXPECT_NEAR(rho.values[p], 6.0, 1e-9);
  const auto v = sampled<2>(ball32, [](const CVector<2>& z) { return std::norm(z(0)); });
  EXPECT_NEAR(ma_density<2>(v).values[p], 0.0, 1e-9);
  const auto base = HermitianField<2>::constant(ball32, CMatrix<2>::Identity());
  EXPECT_NEAR(ma_density<2>(v, base).values[p], 2.0, 1e-9);
  EXPECT_TRUE(std::isnan(rho.values[0]));
}

TEST(MaDensity, BallVolumeByIntegration)
{
  const auto u = sampled<2>(ball32, [](const CVector<2>& z) { return z.squaredNorm(); });
  const double vol = integrate_density<2>(ma_density<2>(u), [](const CVector<2>& z) { return z.norm() < 0.5; });
  EXPECT_NEAR(vol, std::pow(std::numbers::pi, 2) / 2.0 * std::pow(0.5, 4), 0.03);
}

TEST(PoleMass, LogarithmInOneVariable)
{
  for (double eps : {0.3, 1.0}) {
    const auto u = sampled<1>(disk256, [eps](const CVector<1>& z) { return eps * std::log(z.squaredNorm()) + z.squaredNorm(); });
    AnnulusOptions o;
    o.inner = 0.3;
    // flux through |z| = 0.3 plus the shell 0.3 <= |z| < 0.5 of the smooth part
    const double expect = eps * std::numbers::pi + std::numbers::pi * (0.25);
    EXPECT_NEAR(annulus_mass<1>(u, CVector<1>::Zero(), 0.5, o), expect, 2e-2);
  }
  EXPECT_NEAR(measure_normalization<1>(), std::numbers::pi, 1e-2);
}

TEST(PoleMass, LogarithmInTwoVariablesScalesQuadratically)
{
  const double c2 = measure_normalization<2>();
  EXPECT_NEAR(c2, std::pow(std::numbers::pi, 2) / 2.0, 0.1);
  for (double eps : {0.25, 0.5}) {
    const auto u = sampled<2>(ball32, [eps](const CVector<2>& z) { return eps * std::log(z.squaredNorm()); });
    AnnulusOptions o;
    o.inner = 0.5;
    EXPECT_NEAR(annulus_mass<2>(u, CVector<2>::Zero(), 0.6, o) / c2, eps * eps, 1e-6);
  }
}

TEST(PoleMass, RadiusChecks)
{
  const auto u = sampled<1>(disk256, [](const CVector<1>& z) { return z.squaredNorm(); });
  AnnulusOptions o;
  o.inner = 0.4;
  EXPECT_THROW(annulus_mass<1>(u, CVector<1>::Zero(), 0.3, o), RadiusOutOfRange);
  EXPECT_THROW(pole_mass<1>(u, CVector<1>::Zero(), {0.5}), InsufficientRadii);
}

TEST(Lelong, RadialLogarithm)
{
  for (double eps : {0.25, 0.5, 1.0}) {
    auto u = [eps](const CVector<2>& z) { return eps * std::log(z.squaredNorm()) + z.squaredNorm(); };
    const auto e = lelong_fit<2>(u, CVector<2>::Zero(), dyadic_ladder(0.2, 0.01), 24, true);
    EXPECT_NEAR(e.slope, eps, 1e-6);
  }
}

TEST(Lelong, HigherOrderTuple)
{
  for (int k : {1, 2, 3}) {
    auto u = [k](const CVector<2>& z) { return 0.5 * std::log(std::pow(std::norm(z(0)), k) + std::pow(std::norm(z(1)), k)); };
    const auto e = lelong_fit<2>(u, CVector<2>::Zero(), dyadic_ladder(0.2, 0.01));
    EXPECT_NEAR(e.slope, 0.5 * k, 1e-6);
  }
}

TEST(Lelong, AdditiveOverSummands)
{
  plurigreen::testing::Rng rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.1, 1.0), b = rng.uniform(0.1, 1.0);
    auto u = [a](const CVector<1>& z) { return a * std::log(z.squaredNorm()); };
    auto v = [b](const CVector<1>& z) { return b * std::log(std::norm(z(0) * (1.0 + 0.5 * z(0)))); };
    const auto radii = dyadic_ladder(0.1, 0.001);
    const double nu = lelong_fit<1>(u, CVector<1>::Zero(), radii).slope;
    const double nv = lelong_fit<1>(v, CVector<1>::Zero(), radii).slope;
    const double nw = lelong_fit<1>([&](const CVector<1>& z) { return u(z) + v(z); }, CVector<1>::Zero(), radii).slope;
    EXPECT_NEAR(nw, nu + nv, 0.02);
  }
}

TEST(Lelong, SliceAlongLineAndLadder)
{
  auto u = [](const CVector<2>& z) { return 0.5 * std::log(std::pow(std::norm(z(0)), 2) + std::pow(std::norm(z(1)), 2)); };
  const auto e = slice_lelong_number<2>(u, CVector<2>::Zero(), CVector<2>(1.0, 0.5), dyadic_ladder(0.2, 0.01));
  EXPECT_NEAR(e.slope, 1.0, 1e-6);
  const auto ladder = dyadic_ladder(0.4, 0.05);
  ASSERT_EQ(ladder.size(), 4u);
  EXPECT_EQ(ladder.back(), 0.05);
  EXPECT_THROW(lelong_fit<1>([](const CVector<1>&) { return 0.0; }, CVector<1>::Zero(), {0.1, 0.05, 0.025}), InsufficientRadii);
}

TEST(Obstruction, UnitMassPerLine)
{
  EXPECT_TRUE(mass_obstruction_check(2, 1.0));
  EXPECT_TRUE(mass_obstruction_check(2, 0.5));
  EXPECT_FALSE(mass_obstruction_check(2, 1.2));
  EXPECT_THROW(mass_obstruction_check(0, 0.5), InvalidInput);
  EXPECT_THROW(mass_obstruction_check(2, -1.0), InvalidInput);
}
