#include <gtest/gtest.h>

#include <cmath>

#include "plurigreen/apps/torus.hpp"
#include "support/oracles.hpp"

using namespace plurigreen;

namespace {

TorusProblem<1> flat(int res, double eps, cplx pole, double sigma = -1.0)
{
  TorusProblem<1> P;
  P.domain = {DomainKind::torus, 1, {}, {1.0}, res};
  P.epsilon = eps;
  P.pole(0) = pole;
  P.sigma = sigma;
  return P;
}

}  // namespace

TEST(Torus, MatchesFourierSeries)
{
  const auto P = flat(64, 0.3, cplx(0.5, 0.25), 4.0 / 64);
  const auto R = solve_torus<1>(P);
  double worst = 0.0;
  for (std::size_t i = 0; i < R.phi.size(); i += 7) {
    const cplx z = R.phi.z(i)(0);
    worst = std::max(worst, std::abs(R.phi.values[i] - oracle::torus_fourier_potential(1.0, 1.0, P.pole(0), 0.3, P.sigma, z, 40)));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Torus, LedgerAndNormalization)
{
  const auto R = solve_torus<1>(flat(256, 0.3, 0.0));
  EXPECT_NEAR(R.ledger.total_mass, 1.0, 1e-2);
  EXPECT_NEAR(R.ledger.pole_total(), 0.3, 3e-2);
  EXPECT_NEAR(R.compatibility, 0.0, 1e-10);
  EXPECT_NEAR(R.lelong_normalized, 0.3, 0.05);
}

TEST(Torus, NodeTranslationShiftsTheSolution)
{
  const int res = 64, shift = 10;
  const auto a = solve_torus<1>(flat(res, 0.3, 0.0));
  const auto b = solve_torus<1>(flat(res, 0.3, cplx(static_cast<double>(shift) / res, 0.0)));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    auto idx = a.phi.lattice.unravel(i);
    idx[0] = (idx[0] + shift) % res;
    worst = std::max(worst, std::abs(a.phi.values[i] - b.phi.values[a.phi.lattice.ravel(idx)]));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Torus, RejectsBadInput)
{
  auto P = flat(32, 1.2, 0.0);
  EXPECT_THROW(solve_torus<1>(P), InvalidInput);
  auto Q = flat(32, 0.3, 0.0);
  Q.density = [](const CVector<1>&) { return 2.0; };
  EXPECT_THROW(solve_torus<1>(Q), InvalidInput);
  EXPECT_THROW(torus_pole_mass_limit<1>(flat(32, 0.3, 0.0), {0.1}), InsufficientRadii);
}

TEST(Torus, TwoDimensionalNewtonKeepsUnitMass)
{
  TorusProblem<2> P;
  P.domain = {DomainKind::torus, 2, {}, {1.0}, 16};
  P.epsilon = 0.1;
  const auto R = solve_torus<2>(P);
  EXPECT_NEAR(R.ledger.total_mass, 1.0, 2e-2);
  double mean = 0.0;
  for (double v : R.phi.values) mean += v;
  EXPECT_NEAR(mean / static_cast<double>(R.phi.size()), 0.0, 1e-8);
}
