#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "plurigreen/apps/ray.hpp"
#include "support/oracles.hpp"

using namespace plurigreen;

namespace {

RayProblem pole_ray(int res, int width)
{
  RayProblem P;
  P.resolution = res;
  P.width = width;
  RayPole p;
  p.epsilon = 0.2;
  p.f = {Polynomial<2>::variable(0), Polynomial<2>::variable(1)};
  P.poles = {p};
  return P;
}

}  // namespace

TEST(Ray, ZeroDataGivesZeroRay)
{
  RayProblem P;
  P.resolution = 4;
  P.width = 2;
  const auto R = solve_ray(P);
  for (double v : R.u) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(Ray, PoleRayMatchesChordEnvelopeAndIsNontrivial)
{
  const auto P = pole_ray(4, 2);
  const auto R = solve_ray(P);
  double worst = 0.0;
  for (double s = -4.0; s <= -0.5; s += 0.5)
    for (double t = -2.0; t <= -0.5; t += 0.5)
      worst = std::max(worst, std::abs(R.value(s, t) + fs_potential(s) - oracle::chord_envelope(P, s, t)));
  EXPECT_LT(worst, 0.03);
  EXPECT_GT(ray_nontriviality(R.slices), 1e-2);
  EXPECT_LT(midpoint_convexity_defect(R), 1e-8);
}

TEST(Ray, SlicesAreRotationInvariant)
{
  const auto R = solve_ray(pole_ray(4, 2));
  for (double r : {0.1, 0.5, 2.0})
    for (double t : {-1.5, -0.7}) {
      const double base = R.slice_value(cplx(r, 0.0), t);
      for (int k = 1; k < 8; ++k) EXPECT_NEAR(R.slice_value(std::polar(r, 0.8 * k), t), base, 1e-12);
    }
}

TEST(Ray, NontrivialityOfLinearFamily)
{
  std::vector<std::vector<double>> slices;
  const double c = -0.35, dt = 0.5;
  for (int k = 0; k < 5; ++k) slices.push_back(std::vector<double>(10, 1.0 + c * dt * k));
  EXPECT_NEAR(ray_nontriviality(slices), std::abs(c) * dt, 1e-14);
  slices.pop_back();
  slices.pop_back();
  EXPECT_THROW(ray_nontriviality({slices[0], slices[1]}), InvalidInput);
}

TEST(Ray, NonMonomialDataBreaksSymmetry)
{
  auto P = pole_ray(4, 2);
  P.poles[0].f = {Polynomial<2>::parse("z + w"), Polynomial<2>::variable(1)};
  EXPECT_THROW(check_ray_symmetry(P), SymmetryViolation);
  EXPECT_THROW(solve_ray(P), SymmetryViolation);
}

TEST(Ray, ProblemViolations)
{
  auto P = pole_ray(4, 2);
  P.poles[0].epsilon = 1.5;
  P.slices = 2;
  EXPECT_EQ(P.violations().size(), 2u);
  EXPECT_THROW(solve_ray(P), InvalidInput);
}

TEST(Ray, PrimitiveDirections)
{
  EXPECT_EQ(primitive_directions(1).size(), 4u);
  for (const auto& [a, b] : primitive_directions(3)) EXPECT_EQ(std::gcd(std::abs(a), std::abs(b)), 1);
}

TEST(Ray, FubiniStudyPotentialIsStable)
{
  for (double s : {-40.0, -1.0, 0.0, 1.0, 40.0, 800.0}) EXPECT_NEAR(fs_potential(s), s > 30 ? s : std::log1p(std::exp(s)), 1e-12 * (1 + std::abs(s)));
}
